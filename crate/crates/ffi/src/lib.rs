//! C interface to `pecc-core`.
//!
//! Every fallible function returns a [`PeccStatus`]. On failure a message is
//! kept per thread and can be read with [`pecc_last_error_message`].
//! Solutions cross the boundary as opaque [`PeccSolution`] handles that the
//! caller releases with [`pecc_solution_free`]. Coordinate arrays hold `2n`
//! doubles laid out as `x0, y0, x1, y1, ...`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pecc_core::container::{adjust_container, AdjustConfig};
use pecc_core::framework::{solve, Cutoff, SolveConfig};
use pecc_core::gbo::{gbo_minimize, GboConfig, DEFAULT_MAX_ITER};
use pecc_core::neighbor::DEFAULT_L_CUT;
use pecc_core::partition::PartitionStrategy;
use pecc_core::rng::seeded;
use pecc_core::sed::{sed, SedConfig};
use pecc_core::{check_feasibility, Error, Layout, Solution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    /// The container adjustment ended without a feasible layout.
    NotConverged = 5,
    NoFeasibleSolution = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeccStrategy {
    Sector = 0,
    Annulus = 1,
    Fence = 2,
    Random = 3,
}

fn strategy_from(code: u32) -> Result<PartitionStrategy, Fail> {
    Ok(match code {
        c if c == PeccStrategy::Sector as u32 => PartitionStrategy::Sector,
        c if c == PeccStrategy::Annulus as u32 => PartitionStrategy::Annulus,
        c if c == PeccStrategy::Fence as u32 => PartitionStrategy::Fence,
        c if c == PeccStrategy::Random as u32 => PartitionStrategy::Random,
        c => return Err(Fail(PeccStatus::InvalidArgument, format!("unknown strategy code {c}"))),
    })
}

/// Search settings shared by the optimizing entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PeccSolveOptions {
    /// Batch count; 0 picks 3 for n <= 320 and 5 otherwise.
    pub k: u32,
    /// One of the `PeccStrategy` values.
    pub strategy: u32,
    pub max_iter: u32,
    pub s_iter: u32,
    pub l_cut: f64,
    /// Wall-clock budget for `pecc_solve`, used when `cutoff_cycles` is 0.
    pub cutoff_seconds: f64,
    /// Search/adjust cycles for `pecc_solve`; nonzero makes runs reproducible.
    pub cutoff_cycles: u64,
    pub seed: u64,
}

/// Opaque solution: layout, container radius and energy.
pub struct PeccSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> PeccStatus {
    match err {
        Error::InvalidArgument(_) | Error::NeighborSize { .. } | Error::Dimension(_) => PeccStatus::InvalidArgument,
        Error::Parse(_) => PeccStatus::Parse,
        Error::Io { .. } => PeccStatus::Io,
        Error::NotConverged { .. } => PeccStatus::NotConverged,
        Error::NoFeasibleSolution => PeccStatus::NoFeasibleSolution,
    }
}

struct Fail(PeccStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PeccStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PeccStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PeccStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PeccStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_layout(coords: *const f64, n: usize) -> Result<Layout, Fail> {
    if coords.is_null() {
        return Err(null("coords"));
    }
    if n == 0 {
        return Err(Fail(PeccStatus::InvalidArgument, "n must be at least 1".into()));
    }
    let slice = std::slice::from_raw_parts(coords, 2 * n);
    Ok(Layout::new(slice.to_vec())?)
}

unsafe fn write_coords(layout: &Layout, out: *mut f64) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out_coords"));
    }
    let c = layout.coords();
    ptr::copy_nonoverlapping(c.as_ptr(), out, c.len());
    Ok(())
}

unsafe fn read_path<'a>(path: *const c_char) -> Result<&'a Path, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(PeccStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn options_or_default(options: *const PeccSolveOptions) -> PeccSolveOptions {
    if options.is_null() {
        pecc_solve_options_default()
    } else {
        unsafe { *options }
    }
}

fn gbo_config(o: &PeccSolveOptions, n: usize) -> Result<GboConfig, Fail> {
    let k = if o.k == 0 {
        if n <= 320 {
            3
        } else {
            5
        }
    } else {
        o.k as usize
    };
    Ok(GboConfig {
        k: k.min(n.max(1)),
        strategy: strategy_from(o.strategy)?,
        max_iter: o.max_iter as usize,
        l_cut: o.l_cut,
        ..GboConfig::default()
    })
}

fn sed_config(o: &PeccSolveOptions, n: usize) -> Result<SedConfig, Fail> {
    Ok(SedConfig {
        s_iter: o.s_iter as usize,
        gbo: gbo_config(o, n)?,
        ..SedConfig::default()
    })
}

fn hand_out(solution: Solution, out: *mut *mut PeccSolution) {
    unsafe { *out = Box::into_raw(Box::new(PeccSolution(solution))) };
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pecc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn pecc_solve_options_default() -> PeccSolveOptions {
    PeccSolveOptions {
        k: 0,
        strategy: PeccStrategy::Sector as u32,
        max_iter: DEFAULT_MAX_ITER as u32,
        s_iter: 500,
        l_cut: DEFAULT_L_CUT,
        cutoff_seconds: 60.0,
        cutoff_cycles: 0,
        seed: 0,
    }
}

/// Elastic energy of `n` circles at `coords` in a container of `radius`.
#[no_mangle]
pub unsafe extern "C" fn pecc_total_energy(coords: *const f64, n: usize, radius: f64, out_energy: *mut f64) -> PeccStatus {
    guard(|| {
        let layout = read_layout(coords, n)?;
        if out_energy.is_null() {
            return Err(null("out_energy"));
        }
        if !(radius > 0.0) {
            return Err(Fail(PeccStatus::InvalidArgument, "radius must be positive".into()));
        }
        *out_energy = pecc_core::energy::total_energy(&layout, radius);
        Ok(())
    })
}

/// Whether every overlap and container excess is at most `tol`.
#[no_mangle]
pub unsafe extern "C" fn pecc_check_feasibility(
    coords: *const f64,
    n: usize,
    radius: f64,
    tol: f64,
    out_feasible: *mut bool,
) -> PeccStatus {
    guard(|| {
        let layout = read_layout(coords, n)?;
        if out_feasible.is_null() {
            return Err(null("out_feasible"));
        }
        *out_feasible = check_feasibility(&layout, radius, tol).feasible;
        Ok(())
    })
}

/// Batched BFGS from `coords` at a fixed radius; writes `2n` doubles.
/// `options` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn pecc_gbo_minimize(
    coords: *const f64,
    n: usize,
    radius: f64,
    options: *const PeccSolveOptions,
    out_coords: *mut f64,
) -> PeccStatus {
    guard(|| {
        let layout = read_layout(coords, n)?;
        let o = options_or_default(options);
        let result = gbo_minimize(&layout, radius, &gbo_config(&o, n)?, &mut seeded(o.seed))?;
        write_coords(&result, out_coords)
    })
}

/// Shrinks the container around `coords`. On `NotConverged` the best
/// infeasible solution is still stored in `out`; free it in both cases.
#[no_mangle]
pub unsafe extern "C" fn pecc_adjust_container(
    coords: *const f64,
    n: usize,
    radius: f64,
    out: *mut *mut PeccSolution,
) -> PeccStatus {
    guard(|| {
        let layout = read_layout(coords, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        match adjust_container(&layout, radius, &AdjustConfig::default()) {
            Ok(outcome) => {
                hand_out(outcome.solution, out);
                Ok(())
            }
            Err(Error::NotConverged { best, pair, container }) => {
                hand_out(*best, out);
                Err(Fail(
                    PeccStatus::NotConverged,
                    format!("not feasible: pair violation {pair:e}, container violation {container:e}"),
                ))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Perturbation search for a zero-energy layout of `n` circles at `radius`.
#[no_mangle]
pub unsafe extern "C" fn pecc_sed(
    n: usize,
    radius: f64,
    options: *const PeccSolveOptions,
    out_coords: *mut f64,
    out_energy: *mut f64,
) -> PeccStatus {
    guard(|| {
        if out_coords.is_null() || out_energy.is_null() {
            return Err(null("output pointer"));
        }
        let o = options_or_default(options);
        let result = sed(n, radius, &sed_config(&o, n)?, &mut seeded(o.seed))?;
        write_coords(&result.layout, out_coords)?;
        *out_energy = result.energy;
        Ok(())
    })
}

/// Full search for a small container radius, starting from `baseline_radius`.
#[no_mangle]
pub unsafe extern "C" fn pecc_solve(
    n: usize,
    baseline_radius: f64,
    options: *const PeccSolveOptions,
    out: *mut *mut PeccSolution,
) -> PeccStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let o = options_or_default(options);
        let cutoff = if o.cutoff_cycles > 0 {
            Cutoff::Cycles(o.cutoff_cycles)
        } else {
            Cutoff::Seconds(o.cutoff_seconds)
        };
        let mut config = SolveConfig::new(cutoff, o.seed);
        config.sed = sed_config(&o, n)?;
        config.adjust.l_cut = o.l_cut;
        let report = solve(n, baseline_radius, &config)?;
        hand_out(report.best, out);
        Ok(())
    })
}

/// Builds a solution handle from explicit coordinates and radius.
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_new(
    coords: *const f64,
    n: usize,
    radius: f64,
    out: *mut *mut PeccSolution,
) -> PeccStatus {
    guard(|| {
        let layout = read_layout(coords, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(radius > 0.0) {
            return Err(Fail(PeccStatus::InvalidArgument, "radius must be positive".into()));
        }
        hand_out(Solution::new(layout, radius), out);
        Ok(())
    })
}

/// Reads a solution file (`n R` header, then one `x y` line per circle).
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_read(path: *const c_char, out: *mut *mut PeccSolution) -> PeccStatus {
    guard(|| {
        let path = read_path(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        hand_out(Solution::read(path)?, out);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pecc_solution_write(solution: *const PeccSolution, path: *const c_char) -> PeccStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        s.0.write(read_path(path)?)?;
        Ok(())
    })
}

/// Number of circles, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_n(solution: *const PeccSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.n())
}

/// Container radius, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_radius(solution: *const PeccSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.radius)
}

/// Elastic energy, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_energy(solution: *const PeccSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.energy)
}

/// Copies the `2n` coordinates into `out`, which holds `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_coords(solution: *const PeccSolution, out: *mut f64, len: usize) -> PeccStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let c = s.0.layout.coords();
        if len < c.len() {
            return Err(Fail(
                PeccStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", c.len()),
            ));
        }
        write_coords(&s.0.layout, out)
    })
}

/// Releases a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pecc_solution_free(solution: *mut PeccSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
