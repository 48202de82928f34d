//! The outer solve loop.
//!
//! A first feasible solution comes from minimizing a random layout at the
//! baseline radius and adjusting the container around it. After that the
//! loop alternates a fixed-radius search at `min(R_b, R*)` with a container
//! adjustment, keeping any strictly smaller feasible radius, until the
//! cutoff is reached.

use std::time::Instant;

use log::info;
use rand::Rng;

use crate::container::{adjust_container, AdjustConfig};
use crate::error::{Error, Result};
use crate::gbo::gbo_minimize;
use crate::instance::{random_layout, Solution};
use crate::rng::seeded;
use crate::sed::{sed_with_cancel, SedConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// Wall-clock budget, checked between cycles.
    Seconds(f64),
    /// Fixed number of search/adjust cycles; reproducible.
    Cycles(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub cutoff: Cutoff,
    pub sed: SedConfig,
    pub adjust: AdjustConfig,
    pub seed: u64,
    /// Stop as soon as the best radius is at or below this value.
    pub stop_at_radius: Option<f64>,
}

impl SolveConfig {
    pub fn new(cutoff: Cutoff, seed: u64) -> Self {
        Self {
            cutoff,
            sed: SedConfig::default(),
            adjust: AdjustConfig::default(),
            seed,
            stop_at_radius: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.cutoff {
            Cutoff::Seconds(s) if !(s > 0.0) => {
                return Err(Error::InvalidArgument(format!("cutoff must be positive, got {s}")))
            }
            _ => {}
        }
        self.sed.validate()?;
        self.adjust.validate()
    }
}

/// One strict improvement of the best radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub elapsed_s: f64,
    /// Completed search/adjust cycles when the improvement was found
    /// (0 for the initial solution).
    pub cycle: u64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub best: Solution,
    pub history: Vec<Improvement>,
    pub runs_completed: u64,
    pub elapsed_s: f64,
}

impl SolveReport {
    pub fn time_to_best_s(&self) -> f64 {
        self.history.last().map_or(0.0, |h| h.elapsed_s)
    }

    pub fn cycles_to_best(&self) -> u64 {
        self.history.last().map_or(0, |h| h.cycle)
    }
}

/// Runs one seeded solve for `n` circles starting from baseline radius `r_b`.
pub fn solve(n: usize, r_b: f64, config: &SolveConfig) -> Result<SolveReport> {
    solve_with_rng(n, r_b, config, &mut seeded(config.seed))
}

pub fn solve_with_rng<R: Rng + ?Sized>(n: usize, r_b: f64, config: &SolveConfig, rng: &mut R) -> Result<SolveReport> {
    config.validate()?;
    if n == 0 || !(r_b > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and a positive baseline radius".into()));
    }
    let clock = Instant::now();
    let time_up = || match config.cutoff {
        Cutoff::Seconds(s) => clock.elapsed().as_secs_f64() >= s,
        Cutoff::Cycles(_) => false,
    };
    let cycles_left = |done: u64| match config.cutoff {
        Cutoff::Seconds(_) => true,
        Cutoff::Cycles(c) => done < c,
    };

    let mut attempts = 0u64;
    let mut best = loop {
        attempts += 1;
        let start = random_layout(n, r_b, rng)?;
        let x = gbo_minimize(&start, r_b, &config.sed.gbo, rng)?;
        match adjust_container(&x, r_b, &config.adjust) {
            Ok(out) => break out.solution,
            Err(Error::NotConverged { .. }) => {
                // Cycles mode allows one initial attempt per budgeted cycle.
                if time_up() || !cycles_left(attempts - 1) {
                    return Err(Error::NoFeasibleSolution);
                }
            }
            Err(e) => return Err(e),
        }
    };
    let mut history = vec![Improvement {
        elapsed_s: clock.elapsed().as_secs_f64(),
        cycle: 0,
        radius: best.radius,
    }];
    info!("n={n} initial radius {:.12}", best.radius);

    let reached = |r: f64| config.stop_at_radius.is_some_and(|t| r <= t);
    let mut cycles = 0u64;
    while !time_up() && cycles_left(cycles) && !reached(best.radius) {
        let target = r_b.min(best.radius);
        let found = sed_with_cancel(n, target, &config.sed, rng, &time_up)?;
        if found.cancelled {
            break;
        }
        cycles += 1;
        match adjust_container(&found.layout, target, &config.adjust) {
            Ok(out) if out.solution.radius < best.radius => {
                best = out.solution;
                history.push(Improvement {
                    elapsed_s: clock.elapsed().as_secs_f64(),
                    cycle: cycles,
                    radius: best.radius,
                });
                info!("n={n} cycle {cycles}: radius {:.12}", best.radius);
            }
            Ok(_) | Err(Error::NotConverged { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    Ok(SolveReport {
        best,
        history,
        runs_completed: cycles,
        elapsed_s: clock.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::FEASIBILITY_TOL;

    #[test]
    fn two_circles_reach_the_optimum() {
        let cfg = SolveConfig::new(Cutoff::Cycles(3), 1);
        let report = solve(2, 2.5, &cfg).unwrap();
        assert!((report.best.radius - 2.0).abs() < 1e-6, "{}", report.best.radius);
        assert!(report.best.feasibility(FEASIBILITY_TOL).feasible);
        for w in report.history.windows(2) {
            assert!(w[1].radius < w[0].radius);
        }
        assert_eq!(report.history.last().unwrap().radius, report.best.radius);
    }

    #[test]
    fn cycle_mode_is_deterministic() {
        let cfg = SolveConfig::new(Cutoff::Cycles(2), 9);
        let a = solve(4, 2.5, &cfg).unwrap();
        let b = solve(4, 2.5, &cfg).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.runs_completed, 2);
    }

    #[test]
    fn stop_at_radius_ends_early() {
        let mut cfg = SolveConfig::new(Cutoff::Seconds(30.0), 2);
        cfg.stop_at_radius = Some(10.0);
        let report = solve(3, 2.2, &cfg).unwrap();
        assert_eq!(report.runs_completed, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = SolveConfig::new(Cutoff::Seconds(0.0), 0);
        assert!(solve(2, 2.0, &cfg).is_err());
        let cfg = SolveConfig::new(Cutoff::Cycles(1), 0);
        assert!(solve(0, 2.0, &cfg).is_err());
    }
}
