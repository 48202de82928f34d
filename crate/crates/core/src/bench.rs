//! Parameter-study harness: mean GBO convergence time and energy per
//! `(n, k, strategy)` cell.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gbo::{gbo_run, GboConfig};
use crate::instance::random_layout;
use crate::partition::{batch_sizes, PartitionStrategy};
use crate::rng::stream;
use crate::sed::layout_energy;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub strategies: Vec<PartitionStrategy>,
    pub runs_per_cell: usize,
    pub seed: u64,
    /// Template for every run; `k` and `strategy` are overwritten per cell.
    pub gbo: GboConfig,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.k_values.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidArgument("bench lists must be nonempty".into()));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::InvalidArgument("runs_per_cell must be at least 1".into()));
        }
        if self.n_values.contains(&0) || self.k_values.contains(&0) {
            return Err(Error::InvalidArgument("n and k values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub strategy: PartitionStrategy,
    pub radius: f64,
    pub runs: usize,
    pub mean_time_s: f64,
    pub mean_energy: f64,
    pub mean_iterations: f64,
    pub converged_runs: usize,
    pub hessian_entries: usize,
    /// Per-run wall times, in run order.
    pub times_s: Vec<f64>,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `(n, k)` cells skipped because `k > n`.
    pub skipped: Vec<(usize, usize)>,
}

impl BenchReport {
    pub fn row(&self, n: usize, k: usize, strategy: PartitionStrategy) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.k == k && r.strategy == strategy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,k,strategy,radius,runs,mean_time_s,mean_energy,mean_iterations,converged_runs,hessian_entries\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.17e},{},{:.6e},{:.17e},{:.3},{},{}",
                r.n,
                r.k,
                r.strategy,
                r.radius,
                r.runs,
                r.mean_time_s,
                r.mean_energy,
                r.mean_iterations,
                r.converged_runs,
                r.hessian_entries
            );
        }
        out
    }
}

/// Exact inverse-Hessian storage of a `k`-batch run over `n` circles.
pub fn hessian_entries(n: usize, k: usize) -> usize {
    batch_sizes(n, k).iter().map(|b| 4 * b * b).sum()
}

/// Runs every cell. Run `r` of every cell for a given `n` starts from the
/// same random layout, so cells are compared on paired starts.
pub fn run_bench(spec: &BenchSpec, radius_for: impl Fn(usize) -> f64) -> Result<BenchReport> {
    spec.validate()?;
    let mut report = BenchReport::default();
    for &n in &spec.n_values {
        let radius = radius_for(n);
        let starts = (0..spec.runs_per_cell)
            .map(|r| {
                let mut rng = stream(spec.seed ^ n as u64, r as u64);
                let layout = random_layout(n, radius, &mut rng)?;
                Ok((layout, rng.gen::<u64>()))
            })
            .collect::<Result<Vec<_>>>()?;
        for &k in &spec.k_values {
            if k > n {
                log::warn!("skipping n={n} k={k}: more batches than circles");
                report.skipped.push((n, k));
                continue;
            }
            for &strategy in &spec.strategies {
                let cfg = GboConfig {
                    k,
                    strategy,
                    ..spec.gbo.clone()
                };
                let mut times = Vec::with_capacity(starts.len());
                let mut energies = Vec::with_capacity(starts.len());
                let mut iterations = 0usize;
                let mut converged = 0usize;
                let mut entries = 0;
                for (layout, run_seed) in &starts {
                    let mut rng = crate::rng::seeded(*run_seed);
                    let clock = Instant::now();
                    let out = gbo_run(layout, radius, &cfg, &mut rng)?;
                    times.push(clock.elapsed().as_secs_f64());
                    energies.push(layout_energy(&out.layout, radius));
                    iterations += out.iterations;
                    converged += usize::from(out.converged);
                    entries = out.hessian_entries;
                }
                let runs = starts.len() as f64;
                report.rows.push(BenchRow {
                    n,
                    k,
                    strategy,
                    radius,
                    runs: starts.len(),
                    mean_time_s: times.iter().sum::<f64>() / runs,
                    mean_energy: energies.iter().sum::<f64>() / runs,
                    mean_iterations: iterations as f64 / runs,
                    converged_runs: converged,
                    hessian_entries: entries,
                    times_s: times,
                    energies,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_entry_identity() {
        assert_eq!(hessian_entries(10, 5), 5 * 16);
        assert_eq!(hessian_entries(11, 5), 36 + 4 * 16);
        assert_eq!(hessian_entries(1000, 5) * 5, hessian_entries(1000, 1));
    }

    #[test]
    fn small_bench() {
        let spec = BenchSpec {
            n_values: vec![4, 12],
            k_values: vec![1, 5],
            strategies: vec![PartitionStrategy::Sector, PartitionStrategy::Random],
            runs_per_cell: 3,
            seed: 5,
            gbo: GboConfig::default(),
        };
        let report = run_bench(&spec, |n| (n as f64).sqrt() + 1.0).unwrap();
        assert_eq!(report.skipped, vec![(4, 5)]);
        assert_eq!(report.rows.len(), 2 + 4);
        let row = report.row(12, 5, PartitionStrategy::Sector).unwrap();
        assert_eq!(row.hessian_entries, hessian_entries(12, 5));
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 7);
        // Everything except the timing column repeats exactly.
        let again = run_bench(&spec, |n| (n as f64).sqrt() + 1.0).unwrap();
        for (a, b) in report.rows.iter().zip(&again.rows) {
            assert_eq!(a.energies, b.energies);
            assert_eq!(a.mean_iterations, b.mean_iterations);
        }
    }
}
