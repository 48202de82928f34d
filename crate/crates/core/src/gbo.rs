//! Geometric batch optimization.
//!
//! The circles are split once into `k` geometric batches. Every iteration
//! visits the batches in order and takes one BFGS step on each batch's
//! energy while the other batches stay put; each batch keeps its own dense
//! inverse-Hessian approximation. With `k = 1` this is plain BFGS on the
//! total energy.

use rand::Rng;

use crate::energy::{batch_energy_raw, batch_gradient_raw, norm2, Partners};
use crate::error::{Error, Result};
use crate::instance::Layout;
use crate::neighbor::{build_from_coords, AnmEvent, AnmState, NeighborTable, DEFAULT_L_CUT, MIN_L_CUT};
use crate::partition::{make_partition, Partition, PartitionStrategy};

pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_GRAD_TOL: f64 = 1e-12;

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C1: f64 = 1e-4;
pub const MAX_HALVINGS: u32 = 50;

/// Updates with `v.u <= CURVATURE_FLOOR * |u| |v|` are skipped.
pub const CURVATURE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct GboConfig {
    pub k: usize,
    pub strategy: PartitionStrategy,
    pub max_iter: usize,
    /// Stop once the sum over batches of the gradient 2-norms drops to this.
    pub grad_tol: f64,
    pub l_cut: f64,
}

impl Default for GboConfig {
    fn default() -> Self {
        Self {
            k: 1,
            strategy: PartitionStrategy::Sector,
            max_iter: DEFAULT_MAX_ITER,
            grad_tol: DEFAULT_GRAD_TOL,
            l_cut: DEFAULT_L_CUT,
        }
    }
}

impl GboConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument("k and max_iter must be positive".into()));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "grad_tol must lie in (0, 1e-6], got {}",
                self.grad_tol
            )));
        }
        if !(self.l_cut >= MIN_L_CUT) || !self.l_cut.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "l_cut must be finite and >= {MIN_L_CUT}, got {}",
                self.l_cut
            )));
        }
        Ok(())
    }
}

/// Dense row-major approximation of an inverse Hessian.
///
/// The update keeps the matrix bit-for-bit symmetric, which lets the
/// matrix-vector product walk rows as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseHessian {
    dim: usize,
    data: Vec<f64>,
}

impl InverseHessian {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// Builds from row-major entries; the matrix must be square.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries do not form a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_identity(&self) -> bool {
        let d = self.dim;
        self.data
            .iter()
            .enumerate()
            .all(|(idx, &x)| x == if idx / d == idx % d { 1.0 } else { 0.0 })
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
        for i in 0..self.dim {
            self.data[i * self.dim + i] = 1.0;
        }
    }

    /// `out = H x`, accumulated over `j` in ascending order for every row.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out[..d].fill(0.0);
        for (j, &xj) in x[..d].iter().enumerate() {
            let col = &self.data[j * d..(j + 1) * d];
            for (o, &h) in out[..d].iter_mut().zip(col) {
                *o += h * xj;
            }
        }
    }

    /// In-place BFGS update for step `u` and gradient change `v`, using
    /// `scratch` (length `dim`) for `H v`. Returns false when the curvature
    /// `v.u` is below the floor and the matrix was left alone.
    pub fn update(&mut self, u: &[f64], v: &[f64], scratch: &mut [f64]) -> bool {
        let d = self.dim;
        let beta = dot(v, u);
        if !(beta > CURVATURE_FLOOR * norm2(u) * norm2(v)) {
            return false;
        }
        let w = &mut scratch[..d];
        self.mul_vec(v, w);
        let vhv = dot(v, w);
        // H' = H - (u w^T + w u^T) / beta + (1 + v^T H v / beta) u u^T / beta
        let a = (beta + vhv) / (beta * beta);
        let b = 1.0 / beta;
        for i in 0..d {
            let (ui, wi) = (u[i], w[i]);
            let row = &mut self.data[i * d..(i + 1) * d];
            for ((h, &uj), &wj) in row.iter_mut().zip(&u[..d]).zip(&w[..d]) {
                *h += a * (ui * uj) - b * (ui * wj + wi * uj);
            }
        }
        true
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Functional BFGS update: returns the updated matrix, or `h` unchanged when
/// the curvature `v.u` is at or below the floor.
pub fn bfgs_update(h: &InverseHessian, u: &[f64], v: &[f64]) -> Result<InverseHessian> {
    if u.len() != h.dim || v.len() != h.dim {
        return Err(Error::Dimension(format!(
            "matrix is {0}x{0} but u has {1} and v has {2} entries",
            h.dim,
            u.len(),
            v.len()
        )));
    }
    let mut out = h.clone();
    let mut scratch = vec![0.0; h.dim];
    out.update(u, v, &mut scratch);
    Ok(out)
}

/// Per-batch optimizer state.
#[derive(Debug, Clone)]
pub struct BatchState {
    pub batch: Vec<usize>,
    pub hessian: InverseHessian,
}

impl BatchState {
    pub fn new(batch: Vec<usize>) -> Self {
        let hessian = InverseHessian::identity(2 * batch.len());
        Self { batch, hessian }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    /// Objective evaluations spent, including the accepted one.
    pub evals: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineSearchFailure {
    pub evals: u32,
}

/// Backtracking Armijo search from `alpha = 1`, halving up to
/// [`MAX_HALVINGS`] times. `f0` is the objective at 0 and `g_dot_d` the
/// directional derivative there (must be negative).
pub fn line_search<F>(f0: f64, g_dot_d: f64, mut objective: F) -> Result<LineSearchResult, LineSearchFailure>
where
    F: FnMut(f64) -> f64,
{
    if !(g_dot_d < 0.0) {
        return Err(LineSearchFailure { evals: 0 });
    }
    let mut alpha = 1.0;
    for tries in 0..=MAX_HALVINGS {
        let f = objective(alpha);
        if f <= f0 + ARMIJO_C1 * alpha * g_dot_d {
            return Ok(LineSearchResult {
                alpha,
                evals: tries + 1,
            });
        }
        alpha *= 0.5;
    }
    Err(LineSearchFailure {
        evals: MAX_HALVINGS + 1,
    })
}

/// Snapshot handed to an observer after every iteration.
pub struct GboIteration<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    pub layout: &'a Layout,
    pub radius: f64,
    pub partition: &'a Partition,
    /// Table the next iteration will evaluate with.
    pub table: &'a NeighborTable,
    pub grad_norm_sum: f64,
}

#[derive(Debug, Clone)]
pub struct GboOutcome {
    pub layout: Layout,
    pub iterations: usize,
    pub converged: bool,
    /// Stopped before `max_iter` at a fixed point of the iteration; the
    /// layout equals what running to `max_iter` would return.
    pub stalled: bool,
    pub grad_norm_sum: f64,
    pub partition: Partition,
    /// Entries held by all inverse-Hessian matrices together.
    pub hessian_entries: usize,
    pub neighbor_rebuilds: u64,
    pub line_search_failures: usize,
    /// Objective evaluations made by all line searches.
    pub line_search_evals: usize,
}

pub fn gbo_minimize<R: Rng + ?Sized>(
    layout: &Layout,
    radius: f64,
    config: &GboConfig,
    rng: &mut R,
) -> Result<Layout> {
    Ok(gbo_run(layout, radius, config, rng)?.layout)
}

pub fn gbo_run<R: Rng + ?Sized>(
    layout: &Layout,
    radius: f64,
    config: &GboConfig,
    rng: &mut R,
) -> Result<GboOutcome> {
    gbo_run_observed(layout, radius, config, rng, |_| {})
}

/// Runs the batched optimizer, calling `observer` after every iteration.
pub fn gbo_run_observed<R, O>(
    layout: &Layout,
    radius: f64,
    config: &GboConfig,
    rng: &mut R,
    mut observer: O,
) -> Result<GboOutcome>
where
    R: Rng + ?Sized,
    O: FnMut(&GboIteration<'_>),
{
    config.validate()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let partition = make_partition(layout, config.k, config.strategy, rng)?;
    let labels = partition.labels();
    let mut states: Vec<BatchState> = partition.batches().iter().cloned().map(BatchState::new).collect();
    let mut anm = AnmState::new(layout, config.l_cut);
    let mut current = layout.clone();

    let max_dim = states.iter().map(|s| s.hessian.dim()).max().unwrap_or(0);
    let mut grad = vec![0.0; max_dim];
    let mut grad_new = vec![0.0; max_dim];
    let mut dir = vec![0.0; max_dim];
    let mut start = vec![0.0; max_dim];
    let mut step = vec![0.0; max_dim];
    let mut diff = vec![0.0; max_dim];
    let mut scratch = vec![0.0; max_dim];
    // With one batch nothing else moves between visits, so the gradient at
    // the end of one step is the gradient at the start of the next.
    let single = states.len() == 1;
    let mut cached = false;

    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm_sum = f64::INFINITY;
    let mut failures = 0;
    let mut evals = 0;

    let mut stalled = false;

    for t in 1..=config.max_iter {
        iterations = t;
        let mut gsum = 0.0;
        // Whether any coordinate or inverse Hessian changed this iteration.
        let mut active = false;
        for (p, state) in states.iter_mut().enumerate() {
            let id = p as u32;
            let dim = state.hessian.dim();
            let (g, g_new, d, x0, u, v) = (
                &mut grad[..dim],
                &mut grad_new[..dim],
                &mut dir[..dim],
                &mut start[..dim],
                &mut step[..dim],
                &mut diff[..dim],
            );
            if anm.refresh(&current) {
                cached = false;
            }
            let partners = Partners::Table(anm.table());
            if !(single && cached) {
                batch_gradient_raw(current.coords(), &state.batch, radius, partners, g);
            }
            gsum += norm2(g);
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }

            state.hessian.mul_vec(g, d);
            d.iter_mut().for_each(|x| *x = -*x);
            let g_dot_d = dot(g, d);

            let coords = current.coords_mut();
            for (slot, &i) in state.batch.iter().enumerate() {
                x0[2 * slot] = coords[2 * i];
                x0[2 * slot + 1] = coords[2 * i + 1];
            }
            let f0 = batch_energy_raw(coords, &state.batch, &labels, id, radius, partners);
            let search = line_search(f0, g_dot_d, |alpha| {
                for (slot, &i) in state.batch.iter().enumerate() {
                    coords[2 * i] = x0[2 * slot] + alpha * d[2 * slot];
                    coords[2 * i + 1] = x0[2 * slot + 1] + alpha * d[2 * slot + 1];
                }
                if anm.covers(coords) {
                    batch_energy_raw(coords, &state.batch, &labels, id, radius, partners)
                } else {
                    // Long trial steps can outrun the table.
                    let table = build_from_coords(coords, config.l_cut);
                    batch_energy_raw(coords, &state.batch, &labels, id, radius, Partners::Table(&table))
                }
            });
            evals += match &search {
                Ok(r) => r.evals as usize,
                Err(e) => e.evals as usize,
            };
            if search.is_err() {
                for (slot, &i) in state.batch.iter().enumerate() {
                    coords[2 * i] = x0[2 * slot];
                    coords[2 * i + 1] = x0[2 * slot + 1];
                }
                if !state.hessian.is_identity() {
                    state.hessian.reset();
                    active = true;
                }
                cached = false;
                failures += 1;
                continue;
            }
            // The last evaluated trial point is the accepted one.
            for (slot, &i) in state.batch.iter().enumerate() {
                u[2 * slot] = coords[2 * i] - x0[2 * slot];
                u[2 * slot + 1] = coords[2 * i + 1] - x0[2 * slot + 1];
            }
            if u.iter().any(|&x| x != 0.0) {
                active = true;
            }
            anm.refresh(&current);
            let partners = Partners::Table(anm.table());
            batch_gradient_raw(current.coords(), &state.batch, radius, partners, g_new);
            for ((vi, &gn), &go) in v.iter_mut().zip(g_new.iter()).zip(g.iter()) {
                *vi = gn - go;
            }
            state.hessian.update(u, v, &mut scratch);
            if single {
                g.copy_from_slice(g_new);
                cached = true;
            }
        }
        grad_norm_sum = gsum;
        if anm.step(&current) == AnmEvent::Changed {
            cached = false;
        }
        if anm.refresh(&current) {
            cached = false;
        }
        observer(&GboIteration {
            iteration: t,
            layout: &current,
            radius,
            partition: &partition,
            table: anm.table(),
            grad_norm_sum: gsum,
        });
        if gsum <= config.grad_tol {
            converged = true;
            break;
        }
        if !active {
            // Nothing moved and no matrix changed, so every remaining
            // iteration would repeat this one exactly.
            stalled = true;
            break;
        }
    }

    Ok(GboOutcome {
        layout: current,
        iterations,
        converged,
        stalled,
        grad_norm_sum,
        hessian_entries: states.iter().map(|s| s.hessian.entries()).sum(),
        partition,
        neighbor_rebuilds: anm.rebuilds(),
        line_search_failures: failures,
        line_search_evals: evals,
    })
}
