//! Cutoff-distance neighbor lists and their deferred maintenance.
//!
//! A [`NeighborTable`] records, for every circle, the circles whose centers
//! are strictly closer than `l_cut`. With `l_cut >= 2` every overlapping
//! pair is listed, so energies and gradients only need to walk the lists.
//!
//! [`AnmState`] decides when to rebuild the table during an optimization
//! run: it counts iterations, rebuilds once the counter reaches the current
//! deferring length, doubles that length while the rebuilt table keeps
//! coming back unchanged and drops it back to 1 as soon as it differs.

use crate::error::{Error, Result};
use crate::instance::Layout;

pub const DEFAULT_L_CUT: f64 = 4.0;

/// Smallest cutoff that still lists every overlapping pair.
pub const MIN_L_CUT: f64 = 2.0;

/// Per-circle neighbor lists in compressed form, each list sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    offsets: Vec<usize>,
    indices: Vec<u32>,
    l_cut: f64,
}

impl NeighborTable {
    /// Builds a table from explicit per-circle lists. Lists are sorted and
    /// checked for symmetry and self-references.
    pub fn from_lists(lists: Vec<Vec<usize>>, l_cut: f64) -> Result<Self> {
        let n = lists.len();
        let mut sorted = lists;
        for (i, list) in sorted.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.iter().any(|&j| j == i || j >= n) {
                return Err(Error::InvalidArgument(format!(
                    "neighbor list {i} contains itself or an out-of-range index"
                )));
            }
        }
        for (i, list) in sorted.iter().enumerate() {
            for &j in list {
                if sorted[j].binary_search(&i).is_err() {
                    return Err(Error::InvalidArgument(format!(
                        "neighbor lists are not symmetric: {j} in list {i} but not vice versa"
                    )));
                }
            }
        }
        Ok(Self::from_sorted_lists(&sorted, l_cut))
    }

    fn from_sorted_lists(lists: &[Vec<usize>], l_cut: f64) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut indices = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        offsets.push(0);
        for list in lists {
            indices.extend(list.iter().map(|&j| j as u32));
            offsets.push(indices.len());
        }
        Self {
            offsets,
            indices,
            l_cut,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn l_cut(&self) -> f64 {
        self.l_cut
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Number of stored (directed) neighbor entries.
    pub fn entries(&self) -> usize {
        self.indices.len()
    }

    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n())
            .map(|i| self.neighbors(i).iter().map(|&j| j as usize).collect())
            .collect()
    }
}

#[inline]
fn within_cutoff(dx: f64, dy: f64, l_cut: f64) -> bool {
    dx * dx + dy * dy < l_cut * l_cut
}

/// Scan-line construction: sort by x, then test each circle only against
/// the circles to its right whose x differs by less than `l_cut`.
pub fn build_neighbors(layout: &Layout, l_cut: f64) -> NeighborTable {
    build_from_coords(layout.coords(), l_cut)
}

pub(crate) fn build_from_coords(coords: &[f64], l_cut: f64) -> NeighborTable {
    let n = coords.len() / 2;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| coords[2 * a].total_cmp(&coords[2 * b]).then(a.cmp(&b)));

    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &i) in order.iter().enumerate() {
        let (xi, yi) = (coords[2 * i], coords[2 * i + 1]);
        for &j in &order[pos + 1..] {
            let dx = coords[2 * j] - xi;
            if dx >= l_cut {
                break;
            }
            if within_cutoff(dx, coords[2 * j + 1] - yi, l_cut) {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    for list in &mut lists {
        list.sort_unstable();
    }
    NeighborTable::from_sorted_lists(&lists, l_cut)
}

/// All-pairs construction, used as a reference for the scan line.
pub fn build_neighbors_brute_force(layout: &Layout, l_cut: f64) -> NeighborTable {
    let n = layout.n();
    let lists: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let (xi, yi) = layout.center(i);
            (0..n)
                .filter(|&j| {
                    let (xj, yj) = layout.center(j);
                    j != i && within_cutoff(xj - xi, yj - yi, l_cut)
                })
                .collect()
        })
        .collect();
    NeighborTable::from_sorted_lists(&lists, l_cut)
}

/// True when every per-circle list matches.
pub fn neighbors_equal(a: &NeighborTable, b: &NeighborTable) -> Result<bool> {
    if a.n() != b.n() {
        return Err(Error::NeighborSize {
            table: b.n(),
            layout: a.n(),
        });
    }
    // Lists are sorted, so set equality is slice equality.
    Ok(a.offsets == b.offsets && a.indices == b.indices)
}

/// What a single maintenance step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnmEvent {
    /// Counter below the deferring length; nothing rebuilt.
    Deferred,
    /// Rebuilt and found identical; deferring length doubled.
    Stable,
    /// Rebuilt and found different; table replaced, length reset to 1.
    Changed,
}

/// Adaptive maintenance state: counter, deferring length and cached table.
#[derive(Debug, Clone, PartialEq)]
pub struct AnmState {
    cnt: u64,
    len: u64,
    table: NeighborTable,
    rebuilds: u64,
    forced: u64,
    /// Coordinates the table was last built from.
    anchor: Option<Vec<f64>>,
}

impl AnmState {
    /// Fresh state for a new run: counter 0, length 1, table built from `layout`.
    pub fn new(layout: &Layout, l_cut: f64) -> Self {
        Self {
            cnt: 0,
            len: 1,
            table: build_neighbors(layout, l_cut),
            rebuilds: 0,
            forced: 0,
            anchor: Some(layout.coords().to_vec()),
        }
    }

    /// State with an explicit counter and length. `len` must be a power of
    /// two and `cnt < len`. The positions behind `table` are unknown, so the
    /// first [`AnmState::refresh`] rebuilds.
    pub fn with_counters(cnt: u64, len: u64, table: NeighborTable) -> Result<Self> {
        if !len.is_power_of_two() || cnt >= len {
            return Err(Error::InvalidArgument(format!(
                "need cnt < len with len a power of two, got cnt={cnt} len={len}"
            )));
        }
        Ok(Self {
            cnt,
            len,
            table,
            rebuilds: 0,
            forced: 0,
            anchor: None,
        })
    }

    pub fn cnt(&self) -> u64 {
        self.cnt
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn table(&self) -> &NeighborTable {
        &self.table
    }

    /// Number of table reconstructions performed by [`AnmState::step`].
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    /// Rebuilds forced by [`AnmState::refresh`], included in `rebuilds`.
    pub fn forced_rebuilds(&self) -> u64 {
        self.forced
    }

    /// True when no circle has moved more than `(l_cut - 2) / 2` since the
    /// table was built, so every pair closer than 2 in `coords` is listed.
    pub fn covers(&self, coords: &[f64]) -> bool {
        let Some(anchor) = &self.anchor else {
            return false;
        };
        if anchor.len() != coords.len() {
            return false;
        }
        let margin = 0.5 * (self.table.l_cut - MIN_L_CUT);
        let limit = margin * margin;
        anchor
            .chunks_exact(2)
            .zip(coords.chunks_exact(2))
            .all(|(a, c)| {
                let (dx, dy) = (c[0] - a[0], c[1] - a[1]);
                dx * dx + dy * dy <= limit
            })
    }

    /// Rebuilds the table if it no longer [covers](AnmState::covers)
    /// `layout`, resetting the counter and length as a changed table would.
    /// Returns whether a rebuild happened.
    pub fn refresh(&mut self, layout: &Layout) -> bool {
        if self.covers(layout.coords()) {
            return false;
        }
        self.rebuilds += 1;
        self.forced += 1;
        self.table = build_neighbors(layout, self.table.l_cut);
        self.anchor = Some(layout.coords().to_vec());
        self.cnt = 0;
        self.len = 1;
        true
    }

    pub fn step(&mut self, layout: &Layout) -> AnmEvent {
        self.cnt += 1;
        if self.cnt < self.len {
            return AnmEvent::Deferred;
        }
        self.rebuilds += 1;
        let fresh = build_neighbors(layout, self.table.l_cut);
        self.anchor = Some(layout.coords().to_vec());
        self.cnt = 0;
        if fresh == self.table {
            self.len = self.len.saturating_mul(2);
            AnmEvent::Stable
        } else {
            self.table = fresh;
            self.len = 1;
            AnmEvent::Changed
        }
    }
}

/// Functional form of [`AnmState::step`].
pub fn anm_step(mut state: AnmState, layout: &Layout) -> AnmState {
    state.step(layout);
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::random_layout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Layout {
        Layout::from_points(&xs.iter().map(|&x| (x, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn strict_cutoff_examples() {
        let t = build_neighbors(&line(&[0.0, 3.0, 8.0]), 4.0);
        assert_eq!(t.to_lists(), vec![vec![1], vec![0], vec![]]);
        let t = build_neighbors(&line(&[0.0, 4.0]), 4.0);
        assert_eq!(t.to_lists(), vec![Vec::<usize>::new(), vec![]]);
    }

    #[test]
    fn scan_line_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            // 200 centers in a disk of radius 12.
            let pts: Vec<(f64, f64)> = std::iter::from_fn(|| {
                let l = random_layout(1, 12.0, &mut rng).unwrap();
                let (x, y) = l.center(0);
                Some((x, y))
            })
            .filter(|(x, y)| x.hypot(*y) < 12.0)
            .take(200)
            .collect();
            let layout = Layout::from_points(&pts).unwrap();
            let a = build_neighbors(&layout, 4.0);
            let b = build_neighbors_brute_force(&layout, 4.0);
            assert!(neighbors_equal(&a, &b).unwrap());
            assert!(a.entries() > 0);
        }
    }

    #[test]
    fn equality_and_size_mismatch() {
        let a = build_neighbors(&line(&[0.0, 3.0, 8.0]), 4.0);
        assert!(neighbors_equal(&a, &a).unwrap());
        let b = build_neighbors(&line(&[0.0, 3.0, 6.5]), 4.0);
        assert!(!neighbors_equal(&a, &b).unwrap());
        let c = build_neighbors(&line(&[0.0, 3.0]), 4.0);
        assert!(neighbors_equal(&a, &c).is_err());
    }

    #[test]
    fn from_lists_validates() {
        assert!(NeighborTable::from_lists(vec![vec![1], vec![]], 4.0).is_err());
        assert!(NeighborTable::from_lists(vec![vec![0]], 4.0).is_err());
        let t = NeighborTable::from_lists(vec![vec![2, 1], vec![0], vec![0]], 4.0).unwrap();
        assert_eq!(t.neighbors(0), &[1, 2]);
    }

    #[test]
    fn anm_examples() {
        let layout = line(&[0.0, 3.0, 8.0]);
        let table = build_neighbors(&layout, 4.0);

        let s = AnmState::with_counters(0, 2, table.clone()).unwrap();
        let s = anm_step(s, &layout);
        assert_eq!((s.cnt(), s.len()), (1, 2));
        assert_eq!(s.table(), &table);
        assert_eq!(s.rebuilds(), 0);

        let s = anm_step(s, &layout);
        assert_eq!((s.cnt(), s.len()), (0, 4));
        assert_eq!(s.table(), &table);

        let moved = line(&[0.0, 3.0, 6.5]);
        let s = AnmState::with_counters(0, 1, table.clone()).unwrap();
        let s = anm_step(s, &moved);
        assert_eq!((s.cnt(), s.len()), (0, 1));
        assert_eq!(s.table(), &build_neighbors(&moved, 4.0));
    }

    #[test]
    fn anm_length_doubles_while_stable() {
        let layout = line(&[0.0, 3.0, 8.0]);
        let mut s = AnmState::new(&layout, 4.0);
        let mut checks = 0;
        for _ in 0..1000 {
            if s.step(&layout) == AnmEvent::Stable {
                checks += 1;
                assert_eq!(s.len(), 1 << checks);
            }
            assert!(s.cnt() < s.len());
        }
        // 1 + 2 + ... + 2^(m-1) = 2^m - 1 <= 1000 iterations.
        assert_eq!(checks, 9);
        assert_eq!(s.rebuilds(), 9);
    }

    #[test]
    fn with_counters_validates() {
        let t = build_neighbors(&line(&[0.0]), 4.0);
        assert!(AnmState::with_counters(0, 3, t.clone()).is_err());
        assert!(AnmState::with_counters(2, 2, t.clone()).is_err());
        assert!(AnmState::with_counters(1, 2, t).is_ok());
    }
}
