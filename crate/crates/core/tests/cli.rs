use std::fs;
use std::process::{Command, Output};

use pecc_core::{check_feasibility, Solution};

fn pecc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pecc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn invalid_arguments_exit_nonzero() {
    assert!(!pecc(&["solve", "--n", "0", "--cutoff-cycles", "1"]).status.success());
    assert!(!pecc(&["solve", "--n", "3", "--cutoff-s", "1", "--cutoff-cycles", "1"]).status.success());
    assert!(!pecc(&["solve", "--n", "3", "--decision"]).status.success());
    assert!(!pecc(&["bogus"]).status.success());
}

#[test]
fn solve_writes_consistent_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = pecc(&["solve", "--n", "5", "--cutoff-cycles", "2", "--runs", "2", "--seed", "3", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "run,seed,radius,energy,time_to_best_s,feasible");
    let mut best = f64::INFINITY;
    for (run, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let radius: f64 = fields[2].parse().unwrap();
        let s = Solution::read(&out.join(format!("run_{run:03}.txt"))).unwrap();
        assert_eq!(s.radius, radius);
        assert!(check_feasibility(&s.layout, s.radius, 1e-9).feasible);
        best = best.min(radius);
    }
    let table = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(table.contains(&format!("best radius   {best:.12}")), "{table}");
    assert_eq!(String::from_utf8(o.stdout).unwrap(), table);
}

#[test]
fn decision_mode_reports_fixed_radius() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = pecc(&["solve", "--n", "7", "--radius", "3.05", "--decision", "--cutoff-cycles", "1", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = Solution::read(&out.join("run_000.txt")).unwrap();
    assert_eq!(s.radius, 3.05);
    assert!(s.energy <= 1e-25);
}

#[test]
fn render_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("s.txt");
    fs::write(&sol, "2 2\n-1 0\n1 0\n").unwrap();
    let svg = dir.path().join("s.svg");
    let o = pecc(&["render", sol.to_str().unwrap(), "-o", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml") || text.starts_with("<svg"));
    assert_eq!(text.matches("<circle").count(), 3);

    let o = pecc(&["bench", "--n", "12", "--k", "1,2", "--runs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("n,k,strategy,radius,runs,"));
    assert_eq!(csv.lines().count(), 3);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "3 2\n0 0\n").unwrap();
    assert!(!pecc(&["render", bad.to_str().unwrap(), "-o", svg.to_str().unwrap()]).status.success());
}
