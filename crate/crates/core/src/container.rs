//! Container-radius adjustment by a shrinking penalty on `R^2`.
//!
//! The radius joins the circle coordinates as a free variable and BFGS
//! minimizes `U = E + lambda R^2`. `lambda` starts at 1e-4 and is halved after
//! each outer round, so the final rounds leave a layout whose overlaps are
//! negligible at a locally minimal radius.

use crate::energy::{penalty_value_and_gradient_raw, Partners};
use crate::error::{Error, Result};
use crate::gbo::{dot, line_search, InverseHessian};
use crate::instance::{check_feasibility, Layout, Solution, FEASIBILITY_TOL};
use crate::neighbor::{build_from_coords, AnmEvent, AnmState, DEFAULT_L_CUT, MIN_L_CUT};

/// Lower bound applied to trial radii during the line search.
pub const RADIUS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustConfig {
    pub lambda0: f64,
    pub outer_iters: usize,
    pub inner_max_iter: usize,
    /// Inner rounds stop once the gradient infinity-norm reaches this.
    pub inner_grad_tol: f64,
    pub l_cut: f64,
}

impl Default for AdjustConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-4,
            outer_iters: 35,
            inner_max_iter: 2000,
            inner_grad_tol: 1e-12,
            l_cut: DEFAULT_L_CUT,
        }
    }
}

impl AdjustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) || self.outer_iters == 0 || self.inner_max_iter == 0 || !(self.inner_grad_tol > 0.0) {
            return Err(Error::InvalidArgument("adjustment parameters must be positive".into()));
        }
        if !(self.l_cut >= MIN_L_CUT) {
            return Err(Error::InvalidArgument(format!("l_cut must be >= {MIN_L_CUT}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdjustOutcome {
    pub solution: Solution,
    /// Radius after each outer round.
    pub radius_trace: Vec<f64>,
    pub inner_iterations: usize,
}

/// Shrinks (or grows) the container around `layout` until the layout is
/// feasible at a locally minimal radius.
pub fn adjust_container(layout: &Layout, radius: f64, config: &AdjustConfig) -> Result<AdjustOutcome> {
    config.validate()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let dim = layout.coords().len() + 1;
    let mut z: Vec<f64> = layout.coords().iter().copied().chain([radius]).collect();
    let mut anm = AnmState::new(layout, config.l_cut);
    let mut h = InverseHessian::identity(dim);
    let (mut g, mut g_new, mut d, mut z0, mut u, mut v, mut scratch) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut lambda = config.lambda0;
    let mut trace = Vec::with_capacity(config.outer_iters);
    let mut inner_total = 0;
    // Positions-only view used for maintenance; kept in sync with z.
    let mut positions = layout.clone();

    for _ in 0..config.outer_iters {
        h.reset();
        let partners = Partners::Table(anm.table());
        let mut f = penalty_value_and_gradient_raw(&z, lambda, partners, Some(&mut g));
        for _ in 0..config.inner_max_iter {
            if g.iter().fold(0.0_f64, |m, x| m.max(x.abs())) <= config.inner_grad_tol {
                break;
            }
            inner_total += 1;
            h.mul_vec(&g, &mut d);
            d.iter_mut().for_each(|x| *x = -*x);
            let g_dot_d = dot(&g, &d);
            z0.copy_from_slice(&z);
            let partners = Partners::Table(anm.table());
            let search = line_search(f, g_dot_d, |alpha| {
                for ((zi, &z0i), &di) in z.iter_mut().zip(&z0).zip(&d) {
                    *zi = z0i + alpha * di;
                }
                let r = &mut z[dim - 1];
                *r = r.max(RADIUS_FLOOR);
                if anm.covers(&z[..dim - 1]) {
                    penalty_value_and_gradient_raw(&z, lambda, partners, None)
                } else {
                    let table = build_from_coords(&z[..dim - 1], config.l_cut);
                    penalty_value_and_gradient_raw(&z, lambda, Partners::Table(&table), None)
                }
            });
            match search {
                Ok(_) => {
                    for ((ui, &zi), &z0i) in u.iter_mut().zip(&z).zip(&z0) {
                        *ui = zi - z0i;
                    }
                    if u.iter().all(|&x| x == 0.0) {
                        // A zero step leaves every later iteration identical.
                        break;
                    }
                    positions.coords_mut().copy_from_slice(&z[..dim - 1]);
                    anm.refresh(&positions);
                    let partners = Partners::Table(anm.table());
                    f = penalty_value_and_gradient_raw(&z, lambda, partners, Some(&mut g_new));
                    for ((vi, &a), &b) in v.iter_mut().zip(&g_new).zip(&g) {
                        *vi = a - b;
                    }
                    h.update(&u, &v, &mut scratch);
                    std::mem::swap(&mut g, &mut g_new);
                }
                Err(_) => {
                    z.copy_from_slice(&z0);
                    if h.is_identity() {
                        // Even steepest descent cannot make progress.
                        break;
                    }
                    h.reset();
                    continue;
                }
            }
            if anm.step(&positions) == AnmEvent::Changed {
                // Keep f and g consistent with the table used next.
                let partners = Partners::Table(anm.table());
                f = penalty_value_and_gradient_raw(&z, lambda, partners, Some(&mut g));
            }
        }
        trace.push(z[dim - 1]);
        lambda *= 0.5;
    }

    let r = z.pop().expect("nonempty");
    let layout = Layout::new(z)?;
    let solution = Solution::new(layout, r);
    let report = check_feasibility(&solution.layout, r, FEASIBILITY_TOL);
    if !report.feasible {
        return Err(Error::NotConverged {
            best: Box::new(solution),
            pair: report.max_pair_violation,
            container: report.max_container_violation,
        });
    }
    Ok(AdjustOutcome {
        solution,
        radius_trace: trace,
        inner_iterations: inner_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::total_energy;
    use crate::instance::hexagonal_seven;

    #[test]
    fn single_circle() {
        let l = Layout::from_points(&[(0.3, 0.2)]).unwrap();
        let out = adjust_container(&l, 1.5, &AdjustConfig::default()).unwrap();
        assert!((out.solution.radius - 1.0).abs() < 1e-6, "{}", out.solution.radius);
        assert_eq!(out.radius_trace.len(), 35);
    }

    #[test]
    fn two_circles() {
        let l = Layout::from_points(&[(-1.05, 0.01), (0.98, -0.02)]).unwrap();
        let out = adjust_container(&l, 2.2, &AdjustConfig::default()).unwrap();
        assert!((out.solution.radius - 2.0).abs() < 1e-6, "{}", out.solution.radius);
    }

    #[test]
    fn seven_circles_near_hexagon() {
        let hex = hexagonal_seven();
        let jittered = Layout::new(
            hex.coords()
                .iter()
                .enumerate()
                .map(|(i, &c)| c * 1.02 + 0.003 * ((i * 7 % 5) as f64 - 2.0))
                .collect(),
        )
        .unwrap();
        let out = adjust_container(&jittered, 3.1, &AdjustConfig::default()).unwrap();
        let s = &out.solution;
        assert!((s.radius - 3.0).abs() < 1e-6, "{}", s.radius);
        assert!(s.energy <= 1e-12);
        assert_eq!(s.energy, total_energy(&s.layout, s.radius));
        // Starting with slack, the first round shrinks the container.
        assert!(out.radius_trace[0] < 3.1);
    }

    #[test]
    fn rejects_bad_input() {
        let l = Layout::from_points(&[(0.0, 0.0)]).unwrap();
        assert!(adjust_container(&l, 0.0, &AdjustConfig::default()).is_err());
        let c = AdjustConfig {
            outer_iters: 0,
            ..AdjustConfig::default()
        };
        assert!(adjust_container(&l, 1.0, &c).is_err());
    }
}
