use std::fs;
use std::process::{Command, Output};

use midpoint_vi::TrajectoryRecord;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_midpoint-vi"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn harmonic_run_writes_full_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = bin(&[
        "simulate", "--problem", "harmonic", "--scheme", "midpoint_hamiltonian", "--q0", "1", "--p0", "0",
        "--h", "0.01", "--n", "1000", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("max_energy_deviation="), "{summary}");

    let rec = TrajectoryRecord::load(&path).unwrap();
    assert_eq!(rec.rows.len(), 1001);
    assert!(rec.is_complete());
    assert!(rec.rows.windows(2).all(|w| w[1].t > w[0].t));
    assert!(rec.max_energy_deviation() <= 1e-3);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == "i,t,q0,p0,H"));
}

#[test]
fn free_particle_positions_are_linear() {
    let out = bin(&["simulate", "--problem", "free_particle", "--scheme", "midpoint_lagrangian", "--q0", "0.5,-1", "--q1", "0.75,-1.5", "--h", "0.25", "--n", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = TrajectoryRecord::parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rec.dim, 2);
    for r in &rec.rows {
        let i = r.i as f64;
        assert!((r.q[0] - (0.5 + 0.25 * i)).abs() < 1e-13);
        assert!((r.q[1] - (-1.0 - 0.5 * i)).abs() < 1e-13);
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bin(&["simulate", "--scheme", "rk4"]).status.code(), Some(1));
    assert_eq!(bin(&["simulate", "--q0", "1,2", "--p0", "0"]).status.code(), Some(1));
    assert_eq!(bin(&["simulate", "--h", "-1"]).status.code(), Some(1));
    assert_eq!(bin(&["converge", "--h-list", "0.3,0.1"]).status.code(), Some(1));
    assert_eq!(bin(&["verify", "--sizes", "1"]).status.code(), Some(1));
    assert_eq!(bin(&[]).status.code(), Some(1));
}

#[test]
fn solver_failure_writes_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fail.csv");
    let out = bin(&[
        "simulate", "--problem", "pendulum", "--scheme", "midpoint_lagrangian", "--q0", "3", "--q1", "-3",
        "--h", "3", "--n", "20", "--max-iter", "1", "--method", "fixed_point", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().last().unwrap().starts_with("# failure="), "{text}");
    let rec = TrajectoryRecord::parse_csv(&text).unwrap();
    assert!(!rec.is_complete());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep settings\nproblem=pendulum\nscheme=order1\nh=0.1\nn=50\nq0=0.3\n").unwrap();
    let out = bin(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = TrajectoryRecord::parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rec.problem, "pendulum");
    assert_eq!(rec.scheme.name(), "order1");
    assert_eq!(rec.rows.len(), 8);
    assert_eq!(rec.rows[0].q[0], 0.3);

    fs::write(&cfg, "colour=blue\n").unwrap();
    assert_eq!(bin(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn converge_reports_slopes() {
    let out = bin(&["converge", "--problem", "harmonic", "--scheme", "midpoint_lagrangian"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let slope: f64 = text.lines().last().unwrap().strip_prefix("slope=").unwrap().parse().unwrap();
    assert!((slope - 2.0).abs() <= 0.1, "{text}");

    let out = bin(&["converge", "--problem", "free_particle", "--p0", "1"]);
    assert!(String::from_utf8(out.stdout).unwrap().trim_end().ends_with("slope=exact"));
}

#[test]
fn verify_prints_seed_and_passes() {
    let out = bin(&["verify", "--seed", "11", "--sizes", "2..12", "--instances", "20"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.starts_with("seed=11\n"));
    assert!(text.contains("PASS integration_by_parts"));
    assert!(!text.contains("FAIL"));
}
