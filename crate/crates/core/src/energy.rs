//! Elastic energy of a layout and its analytic gradients.
//!
//! Two unit circles overlap by `d_ij = max(0, 2 - |c_i - c_j|)` and a circle
//! sticks out of the container by `d_i0 = max(0, |c_i| + 1 - R)`. The energy
//! is the sum of squared overlaps; it vanishes exactly on feasible layouts.
//!
//! Every sum runs circle by circle in ascending index order, visiting the
//! lower-indexed partners `j < i` (or, for batches, partners outside the
//! batch) in ascending order, then the container term. Skipped partners
//! contribute exact zeros, so an all-pairs sweep and a sweep restricted to a
//! valid neighbor table produce bit-identical results.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::instance::Layout;
use crate::neighbor::NeighborTable;

/// Gradient values laid out like the coordinates they differentiate.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub Vec<f64>);

impl Gradient {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Layout coordinates followed by the container radius: `(x_1, y_1, ..., x_n, y_n, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedVector {
    coords: Vec<f64>,
}

impl AugmentedVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 || coords.len() % 2 != 1 {
            return Err(Error::Dimension(format!(
                "augmented vector needs 2n + 1 entries, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("augmented vector must be finite".into()));
        }
        if !(coords[coords.len() - 1] > 0.0) {
            return Err(Error::InvalidArgument("radius entry must be positive".into()));
        }
        Ok(Self { coords })
    }

    pub fn combine(layout: &Layout, radius: f64) -> Result<Self> {
        let mut coords = Vec::with_capacity(layout.coords().len() + 1);
        coords.extend_from_slice(layout.coords());
        coords.push(radius);
        Self::new(coords)
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn radius(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn positions(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Splits back into a layout and a radius.
    pub fn divide(self) -> (Layout, f64) {
        let mut coords = self.coords;
        let radius = coords.pop().expect("nonempty");
        (Layout::new(coords).expect("validated on construction"), radius)
    }
}

/// Penalty weight on `R^2` in the container-adjustment energy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PenaltyCoefficient(f64);

impl PenaltyCoefficient {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty coefficient must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[inline]
pub fn pair_overlap(ci: (f64, f64), cj: (f64, f64)) -> f64 {
    (2.0 - (ci.0 - cj.0).hypot(ci.1 - cj.1)).max(0.0)
}

#[inline]
pub fn container_overlap(ci: (f64, f64), radius: f64) -> f64 {
    (ci.0.hypot(ci.1) + 1.0 - radius).max(0.0)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Partner enumeration: either every circle or a neighbor list.
#[derive(Clone, Copy)]
pub(crate) enum Partners<'a> {
    All(usize),
    Table(&'a NeighborTable),
}

pub(crate) enum PartnerIter<'a> {
    All(Range<usize>),
    Table(std::slice::Iter<'a, u32>),
}

impl Iterator for PartnerIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            PartnerIter::All(r) => r.next(),
            PartnerIter::Table(it) => it.next().map(|&j| j as usize),
        }
    }
}

impl<'a> Partners<'a> {
    pub(crate) fn new(n: usize, table: Option<&'a NeighborTable>) -> Result<Self> {
        match table {
            None => Ok(Partners::All(n)),
            Some(t) if t.n() == n => Ok(Partners::Table(t)),
            Some(t) => Err(Error::NeighborSize {
                table: t.n(),
                layout: n,
            }),
        }
    }

    /// Candidate partners of `i`, ascending. May include `i` itself.
    #[inline]
    pub(crate) fn of(&self, i: usize) -> PartnerIter<'a> {
        match *self {
            Partners::All(n) => PartnerIter::All(0..n),
            Partners::Table(t) => PartnerIter::Table(t.neighbors(i).iter()),
        }
    }
}

#[inline]
fn pair_sq(coords: &[f64], i: usize, j: usize) -> f64 {
    let dx = coords[2 * i] - coords[2 * j];
    let dy = coords[2 * i + 1] - coords[2 * j + 1];
    let l2 = dx * dx + dy * dy;
    if l2 < 4.0 {
        let d = 2.0 - l2.sqrt();
        d * d
    } else {
        0.0
    }
}

/// Returns `d_i0` for circle `i`.
#[inline]
fn container_excess(coords: &[f64], i: usize, radius: f64) -> f64 {
    let (x, y) = (coords[2 * i], coords[2 * i + 1]);
    ((x * x + y * y).sqrt() + 1.0 - radius).max(0.0)
}

/// Adds the derivative of every `d_ij^2` and of `d_i0^2` with respect to
/// circle `i` into `out[0..2]`. Returns `d_i0`.
#[inline]
fn accumulate_circle_gradient(
    coords: &[f64],
    i: usize,
    radius: f64,
    partners: Partners<'_>,
    out: &mut [f64],
) -> f64 {
    let (xi, yi) = (coords[2 * i], coords[2 * i + 1]);
    let (mut gx, mut gy) = (0.0, 0.0);
    for j in partners.of(i) {
        if j == i {
            continue;
        }
        let dx = xi - coords[2 * j];
        let dy = yi - coords[2 * j + 1];
        let l2 = dx * dx + dy * dy;
        if l2 < 4.0 {
            let l = l2.sqrt();
            let d = 2.0 - l;
            if l > 0.0 {
                let coef = -2.0 * d / l;
                gx += coef * dx;
                gy += coef * dy;
            } else {
                // Coincident centers: push the higher index towards +x.
                gx += if i > j { -2.0 * d } else { 2.0 * d };
            }
        }
    }
    let r = (xi * xi + yi * yi).sqrt();
    let d0 = (r + 1.0 - radius).max(0.0);
    if d0 > 0.0 && r > 0.0 {
        let coef = 2.0 * d0 / r;
        gx += coef * xi;
        gy += coef * yi;
    }
    out[0] += gx;
    out[1] += gy;
    d0
}

/// Batch energy over raw coordinates. `batch_of[j] == id` marks members.
pub(crate) fn batch_energy_raw(
    coords: &[f64],
    batch: &[usize],
    batch_of: &[u32],
    id: u32,
    radius: f64,
    partners: Partners<'_>,
) -> f64 {
    let mut e = 0.0;
    for &i in batch {
        for j in partners.of(i) {
            if j != i && (batch_of[j] != id || j < i) {
                e += pair_sq(coords, i, j);
            }
        }
        let d0 = container_excess(coords, i, radius);
        e += d0 * d0;
    }
    e
}

/// Gradient of the batch energy with respect to the batch coordinates,
/// written into `out` (length `2 * batch.len()`).
pub(crate) fn batch_gradient_raw(
    coords: &[f64],
    batch: &[usize],
    radius: f64,
    partners: Partners<'_>,
    out: &mut [f64],
) {
    out.fill(0.0);
    for (slot, &i) in batch.iter().enumerate() {
        accumulate_circle_gradient(coords, i, radius, partners, &mut out[2 * slot..2 * slot + 2]);
    }
}

/// Pair energy with `j < i` ordering plus container terms.
pub(crate) fn total_energy_raw(coords: &[f64], radius: f64, partners: Partners<'_>) -> f64 {
    let n = coords.len() / 2;
    let mut e = 0.0;
    for i in 0..n {
        for j in partners.of(i) {
            if j < i {
                e += pair_sq(coords, i, j);
            }
        }
        let d0 = container_excess(coords, i, radius);
        e += d0 * d0;
    }
    e
}

/// Penalty energy and gradient over `z = (positions, R)`. `grad` has length `2n + 1`.
pub(crate) fn penalty_value_and_gradient_raw(
    z: &[f64],
    lambda: f64,
    partners: Partners<'_>,
    grad: Option<&mut [f64]>,
) -> f64 {
    let n2 = z.len() - 1;
    let (pos, radius) = (&z[..n2], z[n2]);
    let value = total_energy_raw(pos, radius, partners) + lambda * radius * radius;
    if let Some(g) = grad {
        g.fill(0.0);
        let mut excess_sum = 0.0;
        for i in 0..n2 / 2 {
            excess_sum += accumulate_circle_gradient(pos, i, radius, partners, &mut g[2 * i..2 * i + 2]);
        }
        g[n2] = 2.0 * lambda * radius - 2.0 * excess_sum;
    }
    value
}

/// Total elastic energy of `layout` in a container of radius `radius`.
pub fn total_energy(layout: &Layout, radius: f64) -> f64 {
    total_energy_raw(layout.coords(), radius, Partners::All(layout.n()))
}

/// Total energy enumerating only tabulated neighbors.
pub fn total_energy_with(layout: &Layout, radius: f64, table: Option<&NeighborTable>) -> Result<f64> {
    let partners = Partners::new(layout.n(), table)?;
    Ok(total_energy_raw(layout.coords(), radius, partners))
}

fn membership(n: usize, batch: &[usize]) -> Result<Vec<u32>> {
    let mut batch_of = vec![1u32; n];
    for &i in batch {
        if i >= n {
            return Err(Error::InvalidArgument(format!(
                "batch index {i} out of range for {n} circles"
            )));
        }
        if batch_of[i] == 0 {
            return Err(Error::InvalidArgument(format!("batch index {i} repeated")));
        }
        batch_of[i] = 0;
    }
    Ok(batch_of)
}

/// Energy seen by one batch: every pair touching the batch, with pairs inside
/// the batch counted once, plus the container terms of the batch circles.
pub fn batch_energy(
    layout: &Layout,
    batch: &[usize],
    radius: f64,
    table: Option<&NeighborTable>,
) -> Result<f64> {
    let partners = Partners::new(layout.n(), table)?;
    let batch_of = membership(layout.n(), batch)?;
    Ok(batch_energy_raw(layout.coords(), batch, &batch_of, 0, radius, partners))
}

/// Gradient of [`batch_energy`] with respect to the coordinates of the batch
/// circles, in batch order; all other circles are held fixed.
pub fn batch_gradient(
    layout: &Layout,
    batch: &[usize],
    radius: f64,
    table: Option<&NeighborTable>,
) -> Result<Gradient> {
    let partners = Partners::new(layout.n(), table)?;
    membership(layout.n(), batch)?;
    let mut out = vec![0.0; 2 * batch.len()];
    batch_gradient_raw(layout.coords(), batch, radius, partners, &mut out);
    Ok(Gradient(out))
}

/// `E(layout(z), R(z)) + lambda * R(z)^2`.
pub fn penalty_energy(z: &AugmentedVector, lambda: PenaltyCoefficient) -> f64 {
    penalty_value_and_gradient_raw(z.coords(), lambda.value(), Partners::All(z.n()), None)
}

pub fn penalty_energy_with(
    z: &AugmentedVector,
    lambda: PenaltyCoefficient,
    table: Option<&NeighborTable>,
) -> Result<f64> {
    let partners = Partners::new(z.n(), table)?;
    Ok(penalty_value_and_gradient_raw(z.coords(), lambda.value(), partners, None))
}

/// Gradient of [`penalty_energy`] over all `2n + 1` variables. The last
/// entry is `2 lambda R - 2 sum_i d_i0`.
pub fn penalty_gradient(
    z: &AugmentedVector,
    lambda: PenaltyCoefficient,
    table: Option<&NeighborTable>,
) -> Result<Gradient> {
    let partners = Partners::new(z.n(), table)?;
    let mut g = vec![0.0; z.coords().len()];
    penalty_value_and_gradient_raw(z.coords(), lambda.value(), partners, Some(&mut g));
    Ok(Gradient(g))
}
