//! Perturbation search for a zero-energy layout at a fixed radius.
//!
//! Starting from a minimized random layout, each round perturbs the current
//! layout `m` times, minimizes every perturbed copy and moves to one of them:
//! the best candidate if it beats the current layout, otherwise a candidate
//! drawn with probability proportional to `exp(J)`. The number of candidates
//! `m` grows with the quality metric `J = ceil(-log10 E)`, so the search
//! explores harder the closer it gets to a feasible layout.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::energy::total_energy_with;
use crate::error::{Error, Result};
use crate::gbo::{gbo_minimize, GboConfig};
use crate::instance::{random_layout, Layout};
use crate::neighbor::{build_neighbors, MIN_L_CUT};
use crate::rng::fork;

#[derive(Debug, Clone, PartialEq)]
pub struct SedConfig {
    pub s_iter: usize,
    /// Layouts at or below this energy count as feasible.
    pub feasible_energy: f64,
    pub perturb_range: f64,
    pub gbo: GboConfig,
}

impl Default for SedConfig {
    fn default() -> Self {
        Self {
            s_iter: 500,
            feasible_energy: 1e-25,
            perturb_range: 0.8,
            gbo: GboConfig::default(),
        }
    }
}

impl SedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_iter == 0 || !(self.feasible_energy > 0.0) || !(self.perturb_range > 0.0) {
            return Err(Error::InvalidArgument("SED parameters must be positive".into()));
        }
        self.gbo.validate()
    }
}

/// `ceil(-log10 energy)`; only defined for positive energies.
pub fn j_metric(energy: f64) -> Result<i32> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "J is defined for finite positive energies, got {energy}"
        )));
    }
    Ok((-energy.log10()).ceil() as i32)
}

/// Shifts every coordinate by an independent draw from `(-range, range)`.
pub fn perturb<R: Rng + ?Sized>(layout: &Layout, range: f64, rng: &mut R) -> Layout {
    if range == 0.0 {
        return layout.clone();
    }
    let coords = layout
        .coords()
        .iter()
        .map(|&c| {
            let shift = loop {
                let s = range * (2.0 * rng.gen::<f64>() - 1.0);
                if s > -range {
                    break s;
                }
            };
            c + shift
        })
        .collect();
    Layout::new(coords).expect("finite shifts keep the layout finite")
}

/// Selection probabilities `exp(J_i) / sum_j exp(J_j)`.
pub fn softmax_probabilities(energies: &[f64]) -> Result<Vec<f64>> {
    let js = energies.iter().map(|&e| j_metric(e)).collect::<Result<Vec<_>>>()?;
    let top = js.iter().copied().max().unwrap_or(0);
    let weights: Vec<f64> = js.iter().map(|&j| f64::from(j - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Picks the next current layout among `candidates` (given by energy).
///
/// Returns the lowest-energy candidate (lowest index on ties) when it is
/// strictly below `current`; otherwise samples by [`softmax_probabilities`].
pub fn select<R: Rng + ?Sized>(candidates: &[f64], current: f64, rng: &mut R) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("select needs at least one candidate".into()));
    }
    let (best, best_e) = candidates
        .iter()
        .enumerate()
        .fold((0, candidates[0]), |(bi, be), (i, &e)| if e < be { (i, e) } else { (bi, be) });
    if best_e < current {
        return Ok(best);
    }
    let probs = softmax_probabilities(candidates)?;
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Energy of a layout via a freshly built minimal-cutoff neighbor table.
pub(crate) fn layout_energy(layout: &Layout, radius: f64) -> f64 {
    let table = build_neighbors(layout, MIN_L_CUT);
    total_energy_with(layout, radius, Some(&table)).expect("table built for this layout")
}

#[derive(Debug, Clone)]
pub struct SedOutcome {
    pub layout: Layout,
    pub energy: f64,
    /// Rounds of the perturbation loop that ran.
    pub rounds: usize,
    pub gbo_calls: usize,
    /// The loop stopped early because the caller asked it to.
    pub cancelled: bool,
}

pub fn sed<R: Rng + ?Sized>(n: usize, radius: f64, config: &SedConfig, rng: &mut R) -> Result<SedOutcome> {
    sed_with_cancel(n, radius, config, rng, &|| false)
}

/// Like [`sed`], but polls `cancel` after every GBO call and stops as soon as
/// it returns true, handing back the best layout seen so far.
pub fn sed_with_cancel<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    config: &SedConfig,
    rng: &mut R,
    cancel: &dyn Fn() -> bool,
) -> Result<SedOutcome> {
    config.validate()?;
    let start = random_layout(n, radius, rng)?;
    let mut current = gbo_minimize(&start, radius, &config.gbo, rng)?;
    let mut current_e = layout_energy(&current, radius);
    let mut best = current.clone();
    let mut best_e = current_e;
    let mut gbo_calls = 1;
    let mut rounds = 0;

    if cancel() {
        return Ok(SedOutcome {
            layout: best,
            energy: best_e,
            rounds,
            gbo_calls,
            cancelled: true,
        });
    }

    for _ in 0..config.s_iter {
        if best_e <= config.feasible_energy {
            break;
        }
        rounds += 1;
        let m = j_metric(current_e)?.max(1) as usize;
        let mut layouts = Vec::with_capacity(m);
        let mut energies = Vec::with_capacity(m);
        for _ in 0..m {
            let mut child = fork(rng);
            let shaken = perturb(&current, config.perturb_range, &mut child);
            let settled = gbo_minimize(&shaken, radius, &config.gbo, &mut child)?;
            gbo_calls += 1;
            energies.push(layout_energy(&settled, radius));
            layouts.push(settled);
            if cancel() {
                break;
            }
        }
        let cancelled = cancel();
        // A feasible candidate has energy 0, where J is undefined; it is
        // also strictly better than the current layout, so take it directly.
        let pick = match energies.iter().position(|&e| e <= 0.0) {
            Some(i) => i,
            None => select(&energies, current_e, rng)?,
        };
        current_e = energies[pick];
        current = layouts.swap_remove(pick);
        if current_e < best_e {
            best = current.clone();
            best_e = current_e;
        }
        if cancelled {
            return Ok(SedOutcome {
                layout: best,
                energy: best_e,
                rounds,
                gbo_calls,
                cancelled: true,
            });
        }
    }

    Ok(SedOutcome {
        layout: best,
        energy: best_e,
        rounds,
        gbo_calls,
        cancelled: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn j_examples() {
        assert_eq!(j_metric(1e-3).unwrap(), 3);
        assert_eq!(j_metric(0.5).unwrap(), 1);
        assert_eq!(j_metric(2.0).unwrap(), 0);
        assert!(j_metric(0.0).is_err());
        assert!(j_metric(-1.0).is_err());
    }

    #[test]
    fn perturb_examples() {
        let l = Layout::from_points(&[(0.0, 1.0), (2.0, -3.0)]).unwrap();
        assert_eq!(perturb(&l, 0.0, &mut seeded(1)), l);
        let p = perturb(&l, 0.8, &mut seeded(1));
        assert!(p.coords().iter().zip(l.coords()).all(|(a, b)| (a - b).abs() < 0.8));
        assert_ne!(p, l);
        assert_eq!(perturb(&l, 0.8, &mut seeded(1)), p);
    }

    #[test]
    fn select_prefers_strict_improvement() {
        for seed in 0..20 {
            assert_eq!(select(&[0.5, 0.01], 0.2, &mut seeded(seed)).unwrap(), 1);
            assert_eq!(select(&[0.01, 0.01], 0.2, &mut seeded(seed)).unwrap(), 0);
        }
        assert!(select(&[], 0.2, &mut seeded(0)).is_err());
    }

    #[test]
    fn softmax_values() {
        let p = softmax_probabilities(&[1e-3, 0.5]).unwrap();
        let e3 = 3f64.exp();
        let e1 = 1f64.exp();
        assert!((p[0] - e3 / (e3 + e1)).abs() < 1e-15);
        assert!((p[0] - 0.8808).abs() < 1e-4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = softmax_probabilities(&[0.5, 0.7]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn select_frequencies() {
        let mut rng = seeded(17);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| select(&[0.5, 0.7], 0.2, &mut rng).unwrap() == 0)
            .count();
        assert!((hits as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn one_circle_with_slack_is_feasible() {
        let out = sed(1, 1.05, &SedConfig::default(), &mut seeded(3)).unwrap();
        assert!(out.energy <= 1e-25);
        assert!(out.rounds <= 2);
    }

    #[test]
    fn below_optimum_stays_infeasible() {
        let mut cfg = SedConfig::default();
        cfg.s_iter = 20;
        let out = sed(7, 2.0, &cfg, &mut seeded(5)).unwrap();
        assert!(out.energy > 0.0);
        assert_eq!(out.rounds, 20);
    }

    #[test]
    fn cancellation_stops_after_current_call() {
        let calls = std::cell::Cell::new(0);
        let cancel = || {
            calls.set(calls.get() + 1);
            calls.get() > 3
        };
        let out = sed_with_cancel(7, 2.0, &SedConfig::default(), &mut seeded(5), &cancel).unwrap();
        assert!(out.cancelled);
        assert!(out.gbo_calls <= 4);
    }
}
