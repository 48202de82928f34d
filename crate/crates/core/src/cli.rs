//! Command-line front end for the `pecc` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;

use crate::bench::{run_bench, BenchSpec};
use crate::container::AdjustConfig;
use crate::framework::{solve, Cutoff, SolveConfig};
use crate::gbo::{GboConfig, DEFAULT_MAX_ITER};
use crate::instance::{estimated_radius, sig17, BestKnownRegistry, Solution, CONTACT_EPS, FEASIBILITY_TOL};
use crate::neighbor::DEFAULT_L_CUT;
use crate::partition::PartitionStrategy;
use crate::render::render_svg;
use crate::rng::{seeded, stream};
use crate::sed::{sed, SedConfig};

#[derive(Debug, Parser)]
#[command(name = "pecc", version, about = "Pack n unit circles into the smallest circular container")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for small container radii over several independent runs.
    Solve(SolveArgs),
    /// Time batched BFGS over a grid of circle counts, batch counts and strategies.
    Bench(BenchArgs),
    /// Draw a solution file as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Number of batches (default 3 for n <= 320, otherwise 5).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = PartitionStrategy::Sector)]
    pub partition: PartitionStrategy,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 500)]
    pub s_iter: usize,
    #[arg(long, default_value_t = DEFAULT_L_CUT)]
    pub l_cut: f64,
}

impl SearchArgs {
    fn gbo(&self, n: usize) -> GboConfig {
        let k = self.k.unwrap_or(if n <= 320 { 3 } else { 5 }).min(n.max(1));
        GboConfig {
            k,
            strategy: self.partition,
            max_iter: self.max_iter,
            l_cut: self.l_cut,
            ..GboConfig::default()
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("cutoff").args(["cutoff_s", "cutoff_cycles"])))]
pub struct SolveArgs {
    #[arg(long)]
    pub n: usize,
    /// Baseline radius; defaults to the registry entry for n.
    #[arg(long)]
    pub radius: Option<f64>,
    /// CSV file of `n,radius` best-known values.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Wall-clock cutoff per run in seconds.
    #[arg(long)]
    pub cutoff_s: Option<f64>,
    /// Search/adjust cycles per run; makes output reproducible.
    #[arg(long)]
    pub cutoff_cycles: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "pecc-out")]
    pub out_dir: PathBuf,
    /// Only decide whether n circles fit in a container of `--radius`.
    #[arg(long)]
    pub decision: bool,
    /// Radius counted as a hit in the summary (defaults to the baseline).
    #[arg(long)]
    pub reference: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub hit_tol: f64,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated circle counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Comma-separated batch counts.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "sector")]
    pub partition: Vec<PartitionStrategy>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_L_CUT)]
    pub l_cut: f64,
    /// Container radius for every n (defaults to the registry entry).
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub solution: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Distance slack for counting two circles as touching.
    #[arg(long, default_value_t = CONTACT_EPS)]
    pub eps: f64,
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Bench(args) => run_bench_cmd(&args),
        Command::Render(args) => {
            let s = Solution::read(&args.solution)?;
            let svg = render_svg(&s, args.eps);
            fs::write(&args.out, svg).with_context(|| format!("writing {}", args.out.display()))?;
            Ok(())
        }
    }
}

fn registry(path: Option<&Path>) -> anyhow::Result<BestKnownRegistry> {
    Ok(match path {
        Some(p) => BestKnownRegistry::load(p)?,
        None => BestKnownRegistry::builtin(),
    })
}

fn baseline(n: usize, explicit: Option<f64>, reg: &BestKnownRegistry) -> f64 {
    explicit.or_else(|| reg.get(n)).unwrap_or_else(|| {
        let r = estimated_radius(n);
        log::warn!("no registry entry for n={n}; using estimated radius {r:.6}");
        r
    })
}

/// One line of the solve summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub radius: f64,
    pub energy: f64,
    /// Seconds to the best radius, or cycles in cycle-cutoff mode.
    pub time_to_best: f64,
    pub feasible: bool,
}

pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("run,seed,radius,energy,time_to_best_s,feasible\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.run,
            r.seed,
            sig17(r.radius),
            sig17(r.energy),
            r.time_to_best,
            r.feasible
        );
    }
    out
}

/// Best and mean radius, hit ratio and mean time over the feasible runs.
pub fn summary_table(records: &[RunRecord], reference: f64, hit_tol: f64) -> String {
    let feasible: Vec<&RunRecord> = records.iter().filter(|r| r.feasible).collect();
    let mut out = String::new();
    let _ = writeln!(out, "runs          {}", records.len());
    let _ = writeln!(out, "feasible      {}", feasible.len());
    if feasible.is_empty() {
        return out;
    }
    let m = feasible.len() as f64;
    let best = feasible.iter().map(|r| r.radius).fold(f64::INFINITY, f64::min);
    let mean = feasible.iter().map(|r| r.radius).sum::<f64>() / m;
    let hits = feasible.iter().filter(|r| r.radius <= reference + hit_tol).count();
    let time = feasible.iter().map(|r| r.time_to_best).sum::<f64>() / m;
    let _ = writeln!(out, "best radius   {best:.12}");
    let _ = writeln!(out, "mean radius   {mean:.12}");
    let _ = writeln!(out, "reference     {reference:.12}");
    let _ = writeln!(out, "hit ratio     {hits}/{}", records.len());
    let _ = writeln!(out, "mean time     {time}");
    out
}

fn run_solve(args: &SolveArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    if args.runs == 0 || args.jobs == 0 {
        bail!("--runs and --jobs must be at least 1");
    }
    let reg = registry(args.registry.as_deref())?;
    let cutoff = match (args.cutoff_s, args.cutoff_cycles) {
        (Some(s), None) => Cutoff::Seconds(s),
        (None, Some(c)) => Cutoff::Cycles(c),
        (None, None) => Cutoff::Seconds(60.0),
        _ => unreachable!("clap enforces the group"),
    };
    if args.decision && args.radius.is_none() {
        bail!("--decision needs --radius");
    }
    let r_b = baseline(args.n, args.radius, &reg);
    let sed_cfg = SedConfig {
        s_iter: args.search.s_iter,
        gbo: args.search.gbo(args.n),
        ..SedConfig::default()
    };
    let mut solve_cfg = SolveConfig::new(cutoff, args.seed);
    solve_cfg.sed = sed_cfg.clone();
    solve_cfg.adjust = AdjustConfig {
        l_cut: args.search.l_cut,
        ..AdjustConfig::default()
    };
    solve_cfg.validate()?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;

    let seeds: Vec<u64> = (0..args.runs)
        .map(|i| stream(args.seed, i as u64).gen::<u64>())
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let results: Vec<crate::Result<(Solution, f64)>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                if args.decision {
                    let clock = Instant::now();
                    let out = sed(args.n, r_b, &sed_cfg, &mut seeded(seed))?;
                    let t = match cutoff {
                        Cutoff::Cycles(_) => out.rounds as f64,
                        Cutoff::Seconds(_) => clock.elapsed().as_secs_f64(),
                    };
                    Ok((Solution::new(out.layout, r_b), t))
                } else {
                    let cfg = SolveConfig {
                        seed,
                        ..solve_cfg.clone()
                    };
                    let report = solve(args.n, r_b, &cfg)?;
                    let t = match cutoff {
                        Cutoff::Cycles(_) => report.cycles_to_best() as f64,
                        Cutoff::Seconds(_) => report.time_to_best_s(),
                    };
                    Ok((report.best, t))
                }
            })
            .collect()
    });

    let mut records = Vec::with_capacity(args.runs);
    for (run, (seed, result)) in seeds.iter().zip(results).enumerate() {
        match result {
            Ok((solution, t)) => {
                let feasible = solution.feasibility(FEASIBILITY_TOL).feasible;
                solution.write(&args.out_dir.join(format!("run_{run:03}.txt")))?;
                records.push(RunRecord {
                    run,
                    seed: *seed,
                    radius: solution.radius,
                    energy: solution.energy,
                    time_to_best: t,
                    feasible,
                });
            }
            Err(crate::Error::NoFeasibleSolution) => {
                log::warn!("run {run}: no feasible solution before the cutoff");
                records.push(RunRecord {
                    run,
                    seed: *seed,
                    radius: f64::INFINITY,
                    energy: f64::INFINITY,
                    time_to_best: f64::NAN,
                    feasible: false,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let csv = summary_csv(&records);
    let table = summary_table(&records, args.reference.unwrap_or(r_b), args.hit_tol);
    fs::write(args.out_dir.join("summary.csv"), &csv)?;
    fs::write(args.out_dir.join("summary.txt"), &table)?;
    print!("{table}");
    if !records.iter().any(|r| r.feasible) {
        bail!("no run produced a feasible solution");
    }
    Ok(())
}

fn run_bench_cmd(args: &BenchArgs) -> anyhow::Result<()> {
    let reg = registry(args.registry.as_deref())?;
    let spec = BenchSpec {
        n_values: args.n.clone(),
        k_values: args.k.clone(),
        strategies: args.partition.clone(),
        runs_per_cell: args.runs,
        seed: args.seed,
        gbo: GboConfig {
            max_iter: args.max_iter,
            l_cut: args.l_cut,
            ..GboConfig::default()
        },
    };
    let report = run_bench(&spec, |n| baseline(n, args.radius, &reg))?;
    for (n, k) in &report.skipped {
        eprintln!("skipped n={n} k={k}: k exceeds n");
    }
    let csv = report.to_csv();
    match &args.out {
        Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
