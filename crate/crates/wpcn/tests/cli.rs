//! End-to-end checks of the `wpcn` binary: exit codes and CSV output.

use std::fs;
use std::process::Command;

fn wpcn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wpcn"))
}

const SOLVE_ONCE_SPEC: &str = r#"{
  "mode": "solve-once",
  "output": "anchor.csv",
  "solvers": ["fast", "reference"],
  "instance": {
    "n_antennas": 1,
    "n_users": 1,
    "p_max_w": 1.0,
    "noise_w": [0.5],
    "harvest_eff": [0.5],
    "snr_gap": 1.0,
    "dl": [[[1.0, 0.0]]],
    "ul": [[1.0, 0.0]]
  }
}"#;

#[test]
fn run_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, SOLVE_ONCE_SPEC).unwrap();
    let out = wpcn()
        .args([
            "run",
            spec.to_str().unwrap(),
            "--output",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("anchor.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mode,K,Nt,alpha,d_p,d_s,p_max_dbm,seed,trial,solver,tau0,sum_rate_bpshz,wall_time_s,flags"
    );
    // two rows, both near the known optimum
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let tau0: f64 = cols[10].parse().unwrap();
        let rate: f64 = cols[11].parse().unwrap();
        assert!((tau0 - 0.632121).abs() < 1e-4, "tau0 {tau0}");
        assert!((rate - 0.530738).abs() < 1e-4, "rate {rate}");
    }
}

#[test]
fn malformed_spec_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("broken.json");
    fs::write(&spec, "{\"mode\": \"solve-once\",").unwrap();
    let out = wpcn()
        .args(["run", spec.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_solver_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        SOLVE_ONCE_SPEC.replace("\"fast\", \"reference\"", "\"simplex\""),
    )
    .unwrap();
    let out = wpcn()
        .args(["run", spec.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("simplex"), "stderr: {stderr}");
}

#[test]
fn missing_spec_exits_two() {
    let out = wpcn()
        .args(["run", "/nonexistent/spec.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solvers_subcommand_lists_registry() {
    let out = wpcn().arg("solvers").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["fast", "reference", "deterministic"] {
        assert!(stdout.contains(name), "missing {name} in {stdout}");
    }
}

#[test]
fn threads_and_seed_flags_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{
  "mode": "compare-solvers",
  "scenario": { "n_users": 2, "n_antennas": 2, "n_trials": 3, "seed": 1 },
  "solvers": ["fast"],
  "measure_time": false,
  "output": "cmp.csv"
}"#,
    )
    .unwrap();
    let out = wpcn()
        .args([
            "run",
            spec.to_str().unwrap(),
            "--output",
            dir.path().to_str().unwrap(),
            "--threads",
            "2",
            "--seed",
            "99",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    // seed column reflects the override
    assert!(csv.lines().nth(1).unwrap().contains(",99,"));
}
