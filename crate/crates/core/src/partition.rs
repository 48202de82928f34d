//! Geometric k-batch partitions of a layout.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PartitionStrategy {
    /// Ascending polar angle `atan2(y, x)`.
    #[default]
    Sector,
    /// Ascending distance from the container center.
    Annulus,
    /// Ascending x coordinate.
    Fence,
    /// Seeded shuffle.
    Random,
}

impl PartitionStrategy {
    pub const ALL: [PartitionStrategy; 4] = [
        PartitionStrategy::Sector,
        PartitionStrategy::Annulus,
        PartitionStrategy::Fence,
        PartitionStrategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PartitionStrategy::Sector => "sector",
            PartitionStrategy::Annulus => "annulus",
            PartitionStrategy::Fence => "fence",
            PartitionStrategy::Random => "random",
        }
    }
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartitionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sector" => Ok(PartitionStrategy::Sector),
            "annulus" => Ok(PartitionStrategy::Annulus),
            "fence" => Ok(PartitionStrategy::Fence),
            "random" => Ok(PartitionStrategy::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown partition strategy `{other}` (expected sector|annulus|fence|random)"
            ))),
        }
    }
}

/// Disjoint batches covering every circle; each batch is stored in ascending
/// index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    batches: Vec<Vec<usize>>,
    strategy: PartitionStrategy,
}

impl Partition {
    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    pub fn k(&self) -> usize {
        self.batches.len()
    }

    pub fn strategy(&self) -> PartitionStrategy {
        self.strategy
    }

    /// Batch id of every circle.
    pub fn labels(&self) -> Vec<u32> {
        let n = self.batches.iter().map(Vec::len).sum();
        let mut labels = vec![0u32; n];
        for (p, batch) in self.batches.iter().enumerate() {
            for &i in batch {
                labels[i] = p as u32;
            }
        }
        labels
    }

    /// Entries of the dense per-batch inverse-Hessian matrices: `sum_p (2 |B_p|)^2`.
    pub fn hessian_entries(&self) -> usize {
        self.batches.iter().map(|b| 4 * b.len() * b.len()).sum()
    }
}

/// Sizes of `k` batches over `n` circles: the first `n mod k` get one extra.
pub fn batch_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|p| n / k + usize::from(p < n % k)).collect()
}

pub fn make_partition<R: Rng + ?Sized>(
    layout: &Layout,
    k: usize,
    strategy: PartitionStrategy,
    rng: &mut R,
) -> Result<Partition> {
    let n = layout.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "batch count must satisfy 1 <= k <= n = {n}, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| -> f64 {
        let (x, y) = layout.center(i);
        match strategy {
            PartitionStrategy::Sector => y.atan2(x),
            PartitionStrategy::Annulus => x.hypot(y),
            PartitionStrategy::Fence => x,
            PartitionStrategy::Random => 0.0,
        }
    };
    if strategy == PartitionStrategy::Random {
        order.shuffle(rng);
    } else {
        let keys: Vec<f64> = (0..n).map(key).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    }
    let mut batches = Vec::with_capacity(k);
    let mut rest = order.as_slice();
    for size in batch_sizes(n, k) {
        let (head, tail) = rest.split_at(size);
        let mut batch = head.to_vec();
        batch.sort_unstable();
        batches.push(batch);
        rest = tail;
    }
    Ok(Partition { batches, strategy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::random_layout;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn ring(degrees: &[f64]) -> Layout {
        let pts: Vec<(f64, f64)> = degrees
            .iter()
            .map(|d| {
                let a = d.to_radians();
                (5.0 * a.cos(), 5.0 * a.sin())
            })
            .collect();
        Layout::from_points(&pts).unwrap()
    }

    #[test]
    fn sector_slices_by_angle() {
        // atan2 maps 190 and 280 degrees to -170 and -80, so they sort first.
        let l = ring(&[10.0, 100.0, 190.0, 280.0]);
        let p = make_partition(&l, 2, PartitionStrategy::Sector, &mut seeded(0)).unwrap();
        let mut got: Vec<Vec<usize>> = p.batches().to_vec();
        got.sort();
        assert_eq!(got, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn sizes() {
        let l = random_layout(5, 3.0, &mut seeded(1)).unwrap();
        for s in PartitionStrategy::ALL {
            let p = make_partition(&l, 2, s, &mut seeded(2)).unwrap();
            let sizes: Vec<usize> = p.batches().iter().map(Vec::len).collect();
            assert_eq!(sizes, vec![3, 2]);
        }
        let l = random_layout(300, 20.0, &mut seeded(1)).unwrap();
        for s in PartitionStrategy::ALL {
            let p = make_partition(&l, 3, s, &mut seeded(2)).unwrap();
            assert!(p.batches().iter().all(|b| b.len() == 100));
            assert_eq!(p.hessian_entries(), 3 * 200 * 200);
        }
    }

    #[test]
    fn other_keys() {
        let l = Layout::from_points(&[(3.0, 0.0), (-1.0, 0.0), (0.0, 2.0), (0.5, 0.0)]).unwrap();
        let p = make_partition(&l, 2, PartitionStrategy::Annulus, &mut seeded(0)).unwrap();
        assert_eq!(p.batches(), &[vec![1, 3], vec![0, 2]]);
        let p = make_partition(&l, 2, PartitionStrategy::Fence, &mut seeded(0)).unwrap();
        assert_eq!(p.batches(), &[vec![1, 2], vec![0, 3]]);
    }

    #[test]
    fn rejects_bad_k() {
        let l = random_layout(3, 3.0, &mut seeded(1)).unwrap();
        assert!(make_partition(&l, 0, PartitionStrategy::Sector, &mut seeded(0)).is_err());
        assert!(make_partition(&l, 4, PartitionStrategy::Sector, &mut seeded(0)).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in PartitionStrategy::ALL {
            assert_eq!(s.name().parse::<PartitionStrategy>().unwrap(), s);
        }
        assert!("spiral".parse::<PartitionStrategy>().is_err());
    }

    proptest! {
        #[test]
        fn disjoint_cover(seed in any::<u64>(), n in 1usize..80, kk in 1usize..80, s in 0usize..4) {
            let k = 1 + kk % n;
            let l = random_layout(n, 5.0, &mut seeded(seed)).unwrap();
            let p = make_partition(&l, k, PartitionStrategy::ALL[s], &mut seeded(seed ^ 1)).unwrap();
            prop_assert_eq!(p.k(), k);
            let mut all: Vec<usize> = p.batches().concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for b in p.batches() {
                prop_assert!(b.len() == n / k || b.len() == n.div_ceil(k));
            }
            if k == 1 {
                prop_assert_eq!(p.batches()[0].clone(), (0..n).collect::<Vec<_>>());
            }
        }

        #[test]
        fn random_strategy_is_deterministic(seed in any::<u64>()) {
            let l = random_layout(40, 5.0, &mut seeded(seed)).unwrap();
            let a = make_partition(&l, 4, PartitionStrategy::Random, &mut seeded(seed)).unwrap();
            let b = make_partition(&l, 4, PartitionStrategy::Random, &mut seeded(seed)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn sector_rotation_covariance(seed in any::<u64>(), quarter in 0usize..4) {
            // Rotating by whole quarter turns keeps coordinates exact; the
            // batches must be the same cyclic runs of the angular order.
            let l = random_layout(24, 5.0, &mut seeded(seed)).unwrap();
            let rotated = Layout::new(l.centers().flat_map(|(x, y)| {
                let (mut a, mut b) = (x, y);
                for _ in 0..quarter { let t = a; a = -b; b = t; }
                [a, b]
            }).collect()).unwrap();
            let angle_order = |lay: &Layout| {
                let mut o: Vec<usize> = (0..lay.n()).collect();
                o.sort_by(|&a, &b| {
                    let (xa, ya) = lay.center(a);
                    let (xb, yb) = lay.center(b);
                    ya.atan2(xa).total_cmp(&yb.atan2(xb))
                });
                o
            };
            let p = make_partition(&rotated, 3, PartitionStrategy::Sector, &mut seeded(0)).unwrap();
            let order = angle_order(&rotated);
            let mut expected: Vec<Vec<usize>> = order.chunks(8).map(|c| { let mut c = c.to_vec(); c.sort(); c }).collect();
            expected.sort();
            let mut got = p.batches().to_vec();
            got.sort();
            prop_assert_eq!(got, expected);
            // Rotation permutes the circular angular order only cyclically.
            let base = angle_order(&l);
            let pos = order.iter().position(|&i| i == base[0]).unwrap();
            let cyc: Vec<usize> = order[pos..].iter().chain(order[..pos].iter()).copied().collect();
            prop_assert_eq!(cyc, base);
        }
    }
}
