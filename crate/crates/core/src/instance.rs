//! Problem instances, layouts, solutions and feasibility checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::energy;
use crate::error::{Error, Result};

/// Default tolerance used when reporting feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Contact threshold used when coloring rendered layouts.
pub const CONTACT_EPS: f64 = 1e-10;

/// A packing instance: `n` unit circles and the quick-start container radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    n: usize,
    baseline_radius: f64,
}

impl Instance {
    pub fn new(n: usize, baseline_radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(baseline_radius >= 1.0) || !baseline_radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "baseline radius must be finite and >= 1, got {baseline_radius}"
            )));
        }
        Ok(Self { n, baseline_radius })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn baseline_radius(&self) -> f64 {
        self.baseline_radius
    }
}

/// Circle centers stored flat as `(x_1, y_1, ..., x_n, y_n)`.
///
/// Circles may sit partially or completely outside any container; the
/// elastic model only penalises that, it never forbids it.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    coords: Vec<f64>,
}

impl Layout {
    /// Wraps a flat coordinate vector. The length must be even and nonzero
    /// and every entry finite.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "layout needs an even, nonzero number of coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "layout coordinate {pos} is not finite"
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().flat_map(|&(x, y)| [x, y]).collect())
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    #[inline]
    pub fn center(&self, i: usize) -> (f64, f64) {
        (self.coords[2 * i], self.coords[2 * i + 1])
    }

    pub fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.coords.chunks_exact(2).map(|c| (c[0], c[1]))
    }
}

/// Draws every coordinate independently from the open interval `(-radius, radius)`.
pub fn random_layout<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Result<Layout> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    let coords = (0..2 * n)
        .map(|_| loop {
            // gen::<f64>() is in [0, 1); reject the closed endpoint -radius.
            let c = radius * (2.0 * rng.gen::<f64>() - 1.0);
            if c > -radius && c < radius {
                break c;
            }
        })
        .collect();
    Layout::new(coords)
}

/// A layout together with its container radius and elastic energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub layout: Layout,
    pub radius: f64,
    pub energy: f64,
}

impl Solution {
    /// Builds a solution, computing the energy from the layout.
    pub fn new(layout: Layout, radius: f64) -> Self {
        let energy = energy::total_energy(&layout, radius);
        Self {
            layout,
            radius,
            energy,
        }
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn feasibility(&self, tol: f64) -> FeasibilityReport {
        check_feasibility(&self.layout, self.radius, tol)
    }

    /// Text form: `n R` on the first line, then one `x y` line per circle,
    /// every value printed with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(48 * (self.n() + 1));
        let _ = writeln!(out, "{} {}", self.n(), sig17(self.radius));
        for (x, y) in self.layout.centers() {
            let _ = writeln!(out, "{} {}", sig17(x), sig17(y));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty solution file".into()))?;
        let mut head = header.split_whitespace();
        let n: usize = parse_field(head.next(), "n", 1)?;
        let radius: f64 = parse_field(head.next(), "radius", 1)?;
        if head.next().is_some() {
            return Err(Error::Parse("line 1: expected `n R`".into()));
        }
        if n == 0 || !(radius > 0.0) {
            return Err(Error::Parse(format!("line 1: invalid header `{header}`")));
        }
        let mut coords = Vec::with_capacity(2 * n);
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            if idx >= n {
                return Err(Error::Parse(format!(
                    "line {lineno}: more than {n} circle lines"
                )));
            }
            let mut it = line.split_whitespace();
            coords.push(parse_field(it.next(), "x", lineno)?);
            coords.push(parse_field(it.next(), "y", lineno)?);
            if it.next().is_some() {
                return Err(Error::Parse(format!("line {lineno}: expected `x y`")));
            }
        }
        if coords.len() != 2 * n {
            return Err(Error::Parse(format!(
                "expected {n} circle lines, found {}",
                coords.len() / 2
            )));
        }
        let layout = Layout::new(coords).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self::new(layout, radius))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse {what} from `{tok}`")))
}

/// Formats with 17 significant digits in scientific notation, which
/// round-trips every finite f64.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Best-known radii keyed by `n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BestKnownRegistry {
    entries: BTreeMap<usize, f64>,
}

impl BestKnownRegistry {
    /// Parses `n,radius` lines. A non-numeric first line is taken as a header;
    /// blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Parse(format!(
                        "registry line {lineno}: expected `n,radius`"
                    )))
                }
            };
            let n = match a.parse::<usize>() {
                Ok(n) => n,
                Err(_) if entries.is_empty() && b.parse::<f64>().is_err() => continue,
                Err(_) => {
                    return Err(Error::Parse(format!(
                        "registry line {lineno}: bad n `{a}`"
                    )))
                }
            };
            let radius: f64 = b
                .parse()
                .map_err(|_| Error::Parse(format!("registry line {lineno}: bad radius `{b}`")))?;
            if n == 0 || !(radius >= 1.0) {
                return Err(Error::Parse(format!(
                    "registry line {lineno}: need n >= 1 and radius >= 1"
                )));
            }
            if entries.insert(n, radius).is_some() {
                return Err(Error::Parse(format!(
                    "registry line {lineno}: duplicate entry for n = {n}"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Proven optima for `n <= 7`, which ship with the crate.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../data/best_known.csv")).expect("bundled registry is valid")
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.entries.get(&n).copied()
    }

    pub fn insert(&mut self, n: usize, radius: f64) -> Result<()> {
        if n == 0 || !(radius >= 1.0) {
            return Err(Error::InvalidArgument(
                "registry entries need n >= 1 and radius >= 1".into(),
            ));
        }
        self.entries.insert(n, radius);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&n, &r)| (n, r))
    }
}

/// Rough container radius for `n` circles when no record is available,
/// assuming a packing density of 0.8 (about what good packings reach for a
/// few hundred circles).
pub fn estimated_radius(n: usize) -> f64 {
    (n as f64 / 0.8).sqrt().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Largest `2 - distance` over all pairs, 0 when no pair overlaps.
    pub max_pair_violation: f64,
    /// Largest `|center| + 1 - R` over all circles, 0 when all fit.
    pub max_container_violation: f64,
}

pub fn check_feasibility(layout: &Layout, radius: f64, tol: f64) -> FeasibilityReport {
    let n = layout.n();
    let mut max_pair = 0.0_f64;
    let mut max_cont = 0.0_f64;
    for i in 0..n {
        let (xi, yi) = layout.center(i);
        max_cont = max_cont.max(xi.hypot(yi) + 1.0 - radius);
        for j in i + 1..n {
            let (xj, yj) = layout.center(j);
            max_pair = max_pair.max(2.0 - (xi - xj).hypot(yi - yj));
        }
    }
    FeasibilityReport {
        feasible: max_pair <= tol && max_cont <= tol,
        max_pair_violation: max_pair,
        max_container_violation: max_cont,
    }
}

/// Per-circle count of other circles whose centers lie within `2 + eps`.
pub fn contact_counts(layout: &Layout, eps: f64) -> Vec<usize> {
    let n = layout.n();
    let mut counts = vec![0; n];
    let limit = 2.0 + eps;
    for i in 0..n {
        let (xi, yi) = layout.center(i);
        for j in i + 1..n {
            let (xj, yj) = layout.center(j);
            if (xi - xj).hypot(yi - yj) <= limit {
                counts[i] += 1;
                counts[j] += 1;
            }
        }
    }
    counts
}

/// The seven-circle hexagonal arrangement: one circle at the origin and six
/// at distance 2, at angles 0, 60, ..., 300 degrees. The vertical offset is
/// `sqrt(3)` rounded up by one ulp so that every contact distance evaluates
/// to exactly 2 and the layout has zero energy at radius 3.
pub fn hexagonal_seven() -> Layout {
    let h = f64::from_bits(3f64.sqrt().to_bits() + 1);
    Layout::from_points(&[
        (0.0, 0.0),
        (2.0, 0.0),
        (1.0, h),
        (-1.0, h),
        (-2.0, 0.0),
        (-1.0, -h),
        (1.0, -h),
    ])
    .expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_layout_ranges_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = random_layout(1, 1.0, &mut rng).unwrap();
        assert!(l.coords().iter().all(|&c| c > -1.0 && c < 1.0));

        let a = random_layout(3, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_layout(3, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);

        let l = random_layout(100, 10.0, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let mean = l.coords().iter().sum::<f64>() / 200.0;
        // Uniform(-10, 10) has sd 10/sqrt(3); the mean of 200 draws has sd ~0.41.
        assert!(mean.abs() < 1.5, "mean {mean}");
        assert!(l.coords().iter().all(|&c| c > -10.0 && c < 10.0));
    }

    #[test]
    fn random_layout_mean_over_many_seeds() {
        // The single-draw statistical check: average |mean| over seeds stays small.
        let mut within = 0;
        for seed in 0..50 {
            let l = random_layout(100, 10.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mean = l.coords().iter().sum::<f64>() / 200.0;
            if mean.abs() < 0.5 {
                within += 1;
            }
        }
        // P(|mean| < 0.5) ~ 0.78 for sd 0.408.
        assert!(within >= 30, "{within}");
    }

    #[test]
    fn random_layout_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_layout(0, 1.0, &mut rng).is_err());
        assert!(random_layout(2, 0.0, &mut rng).is_err());
        assert!(random_layout(2, -1.0, &mut rng).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let l = Layout::from_points(&[(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        let r = check_feasibility(&l, 2.0, 0.0);
        assert!(r.feasible);
        assert_eq!(r.max_pair_violation, 0.0);
        assert_eq!(r.max_container_violation, 0.0);

        let l = Layout::from_points(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let r = check_feasibility(&l, 3.0, 1e-9);
        assert!(!r.feasible);
        assert_eq!(r.max_pair_violation, 1.0);

        let hex = hexagonal_seven();
        assert!(check_feasibility(&hex, 3.0, 1e-9).feasible);
        assert!(!check_feasibility(&hex, 2.9, 1e-9).feasible);
    }

    #[test]
    fn contact_count_examples() {
        let hex = hexagonal_seven();
        assert_eq!(contact_counts(&hex, 1e-10), vec![6, 3, 3, 3, 3, 3, 3]);

        let l = Layout::from_points(&[(0.0, 0.0), (5.0, 0.0)]).unwrap();
        assert_eq!(contact_counts(&l, 1e-10), vec![0, 0]);
        let l = Layout::from_points(&[(0.0, 0.0), (2.0, 0.0)]).unwrap();
        assert_eq!(contact_counts(&l, 0.0), vec![1, 1]);
    }

    #[test]
    fn layout_validation() {
        assert!(Layout::new(vec![]).is_err());
        assert!(Layout::new(vec![1.0]).is_err());
        assert!(Layout::new(vec![1.0, f64::NAN]).is_err());
        assert!(Instance::new(0, 2.0).is_err());
        assert!(Instance::new(2, 0.5).is_err());
        assert_eq!(Instance::new(3, 2.5).unwrap().n(), 3);
    }

    #[test]
    fn solution_text_format() {
        let l = Layout::from_points(&[(0.1, -0.25), (1.0 / 3.0, 2.0)]).unwrap();
        let s = Solution::new(l, 3.5);
        let text = s.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "2 3.5000000000000000e0");
        assert!(text.ends_with('\n'));
        let back = Solution::from_text(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn solution_parse_errors() {
        assert!(Solution::from_text("").is_err());
        assert!(Solution::from_text("2 3.0\n0 0\n").is_err());
        assert!(Solution::from_text("1 3.0\n0 zero\n").is_err());
        assert!(Solution::from_text("1 3.0\n0 0\n1 1\n").is_err());
        assert!(Solution::from_text("0 3.0\n").is_err());
    }

    #[test]
    fn registry_parsing() {
        let r = BestKnownRegistry::parse("n,radius\n3,2.1547005383792515\n# c\n\n7,3\n").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.get(7), Some(3.0));
        assert!(BestKnownRegistry::parse("3,2.0\n3,2.1\n").is_err());
        assert!(BestKnownRegistry::parse("3,0.5\n").is_err());
        assert!(BestKnownRegistry::parse("3;2.0\n").is_err());
        let b = BestKnownRegistry::builtin();
        assert_eq!(b.get(1), Some(1.0));
        assert_eq!(b.get(2), Some(2.0));
        assert!((b.get(3).unwrap() - (1.0 + 2.0 / 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(b.get(7), Some(3.0));
    }
}
