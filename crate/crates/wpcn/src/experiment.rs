//! Batch experiment runner: a JSON spec file describes what to run, the
//! runner executes it (optionally across threads) and emits one CSV plus a
//! human-readable summary on stdout.
//!
//! CSV schema (fixed): header
//! `mode,K,Nt,alpha,d_p,d_s,p_max_dbm,seed,trial,solver,tau0,sum_rate_bpshz,wall_time_s,flags`,
//! one row per (trial, solver), floats with 12 significant digits, `\n`
//! newlines, UTF-8. Rows are ordered by (sweep value, trial, solver name).
//!
//! Reproducibility: a spec with `measure_time` off (the default except for
//! the runtime-sweep modes) produces byte-identical CSV for the same seed at
//! any thread count; with it on, the wall-time column carries real
//! measurements and is inherently run-dependent.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Deserialize;

use crate::linalg::C64;
use crate::model::{ChannelSet, SystemParams};
use crate::sim::{self, ScenarioConfig};
use crate::solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Solve one explicitly given instance.
    SolveOnce,
    /// Monte-Carlo sweep over the user count (runtime comparison shape).
    SweepUsers,
    /// Monte-Carlo sweep over the station distance at fixed station-sink
    /// separation (throughput-vs-geometry shape).
    SweepDp,
    /// Run several solvers on the same draws of the base scenario.
    CompareSolvers,
}

impl Mode {
    fn label(self) -> &'static str {
        match self {
            Mode::SolveOnce => "solve-once",
            Mode::SweepUsers => "sweep-users",
            Mode::SweepDp => "sweep-dp",
            Mode::CompareSolvers => "compare-solvers",
        }
    }

    fn default_solvers(self) -> Vec<String> {
        match self {
            Mode::SolveOnce | Mode::SweepDp => vec!["fast".into()],
            Mode::SweepUsers | Mode::CompareSolvers => {
                vec!["fast".into(), "reference".into()]
            }
        }
    }

    fn default_measure_time(self) -> bool {
        matches!(self, Mode::SweepUsers | Mode::CompareSolvers)
    }
}

/// A fully specified single instance: linear-scale parameters and explicit
/// channel values (complex numbers as `[re, im]` pairs).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInstance {
    pub n_antennas: usize,
    pub n_users: usize,
    pub p_max_w: f64,
    pub noise_w: Vec<f64>,
    pub harvest_eff: Vec<f64>,
    pub snr_gap: f64,
    pub dl: Vec<Vec<[f64; 2]>>,
    pub ul: Vec<[f64; 2]>,
}

impl ExplicitInstance {
    fn build(&self) -> Result<(SystemParams, ChannelSet), RunError> {
        let params = SystemParams::new(
            self.n_antennas,
            self.n_users,
            self.p_max_w,
            self.noise_w.clone(),
            self.harvest_eff.clone(),
            self.snr_gap,
        )
        .map_err(|e| RunError::Config(format!("instance: {e}")))?;
        let dl = self
            .dl
            .iter()
            .map(|h| DVector::from_iterator(h.len(), h.iter().map(|z| C64::new(z[0], z[1]))))
            .collect();
        let ul = self.ul.iter().map(|z| C64::new(z[0], z[1])).collect();
        let channels = ChannelSet::new(&params, dl, ul)
            .map_err(|e| RunError::Config(format!("instance: {e}")))?;
        Ok((params, channels))
    }
}

/// The experiment spec file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub instance: Option<ExplicitInstance>,
    /// Sweep values: user counts for `sweep-users`, station distances in
    /// meters for `sweep-dp`.
    #[serde(default)]
    pub sweep: Vec<f64>,
    /// CSV file name, created inside the runner's output directory.
    pub output: String,
    /// Registered solver names; defaults depend on the mode.
    #[serde(default)]
    pub solvers: Vec<String>,
    /// Record real wall times in the CSV. Defaults to true for the
    /// runtime-comparison modes and false otherwise; leave it off to get
    /// byte-reproducible output.
    #[serde(default)]
    pub measure_time: Option<bool>,
}

/// Errors split by exit code: config problems exit 2, runtime problems 3.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "config error: {msg}"),
            RunError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory the CSV is written into; defaults to the current one.
    pub output_dir: Option<PathBuf>,
    /// Rayon thread count; defaults to the global pool.
    pub threads: Option<usize>,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
}

/// One CSV data row.
#[derive(Debug, Clone)]
pub struct CsvRow {
    pub mode: &'static str,
    pub k: usize,
    pub nt: usize,
    pub alpha: f64,
    pub d_p: f64,
    pub d_s: f64,
    pub p_max_dbm: f64,
    pub seed: u64,
    pub trial: usize,
    pub solver: String,
    pub tau0: f64,
    pub sum_rate: f64,
    pub wall_time: f64,
    pub flags: String,
}

pub const CSV_HEADER: &str =
    "mode,K,Nt,alpha,d_p,d_s,p_max_dbm,seed,trial,solver,tau0,sum_rate_bpshz,wall_time_s,flags";

/// Parse and structurally validate a spec file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    validate_spec(&spec)?;
    Ok(spec)
}

fn validate_spec(spec: &ExperimentSpec) -> Result<(), RunError> {
    let solvers = effective_solvers(spec);
    for name in &solvers {
        solver::create(name).map_err(|e| RunError::Config(e.to_string()))?;
    }
    match spec.mode {
        Mode::SolveOnce => {
            if spec.instance.is_none() {
                return Err(RunError::Config(
                    "solve-once needs an `instance` block".into(),
                ));
            }
        }
        Mode::SweepUsers => {
            let scenario = require_scenario(spec)?;
            scenario
                .validate()
                .map_err(|e| RunError::Config(e.to_string()))?;
            if spec.sweep.is_empty() {
                return Err(RunError::Config("sweep-users needs sweep values".into()));
            }
            for v in &spec.sweep {
                if v.fract() != 0.0 || *v < 1.0 {
                    return Err(RunError::Config(format!(
                        "sweep-users values must be positive integers, got {v}"
                    )));
                }
            }
        }
        Mode::SweepDp => {
            let scenario = require_scenario(spec)?;
            scenario
                .validate()
                .map_err(|e| RunError::Config(e.to_string()))?;
            if spec.sweep.is_empty() {
                return Err(RunError::Config("sweep-dp needs sweep values".into()));
            }
            let d_ps = scenario.d_p_m + scenario.d_s_m;
            for v in &spec.sweep {
                if !(*v > 0.0 && *v < d_ps) {
                    return Err(RunError::Config(format!(
                        "sweep-dp values must lie strictly between 0 and d_ps = {d_ps}, got {v}"
                    )));
                }
            }
        }
        Mode::CompareSolvers => {
            let scenario = require_scenario(spec)?;
            scenario
                .validate()
                .map_err(|e| RunError::Config(e.to_string()))?;
        }
    }
    Ok(())
}

fn require_scenario(spec: &ExperimentSpec) -> Result<&ScenarioConfig, RunError> {
    spec.scenario
        .as_ref()
        .ok_or_else(|| RunError::Config(format!("{} needs a `scenario` block", spec.mode.label())))
}

fn effective_solvers(spec: &ExperimentSpec) -> Vec<String> {
    let mut names = if spec.solvers.is_empty() {
        spec.mode.default_solvers()
    } else {
        spec.solvers.clone()
    };
    names.sort();
    names.dedup();
    names
}

/// Run a spec file end to end and return the path of the CSV written.
pub fn run(spec_path: &Path, opts: &RunOptions) -> Result<PathBuf, RunError> {
    let spec = load_spec(spec_path)?;
    let rows = match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Runtime(format!("thread pool: {e}")))?;
            pool.install(|| execute(&spec, opts.seed))?
        }
        None => execute(&spec, opts.seed)?,
    };
    let dir = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| RunError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(&spec.output);
    emit_csv(&rows, &path)?;
    print_summary(&spec, &rows);
    Ok(path)
}

/// Execute a validated spec and produce the CSV rows, ordered by
/// (sweep value, trial, solver name).
pub fn execute(spec: &ExperimentSpec, seed_override: Option<u64>) -> Result<Vec<CsvRow>, RunError> {
    validate_spec(spec)?;
    let solvers = effective_solvers(spec);
    let measure = spec
        .measure_time
        .unwrap_or(spec.mode.default_measure_time());
    let mut rows = match spec.mode {
        Mode::SolveOnce => solve_once_rows(spec, seed_override, &solvers)?,
        Mode::SweepUsers => {
            let mut values = spec.sweep.clone();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut rows = Vec::new();
            for v in values {
                let mut cfg = require_scenario(spec)?.clone();
                cfg.n_users = v as usize;
                apply_seed(&mut cfg, seed_override);
                rows.extend(monte_carlo_rows(spec.mode, &cfg, &solvers)?);
            }
            rows
        }
        Mode::SweepDp => {
            let base = require_scenario(spec)?.clone();
            let d_ps = base.d_p_m + base.d_s_m;
            let mut values = spec.sweep.clone();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut rows = Vec::new();
            for v in values {
                let mut cfg = base.clone();
                cfg.d_p_m = v;
                cfg.d_s_m = d_ps - v;
                apply_seed(&mut cfg, seed_override);
                rows.extend(monte_carlo_rows(spec.mode, &cfg, &solvers)?);
            }
            rows
        }
        Mode::CompareSolvers => {
            let mut cfg = require_scenario(spec)?.clone();
            apply_seed(&mut cfg, seed_override);
            monte_carlo_rows(spec.mode, &cfg, &solvers)?
        }
    };
    if !measure {
        for row in &mut rows {
            row.wall_time = 0.0;
        }
    }
    Ok(rows)
}

fn apply_seed(cfg: &mut ScenarioConfig, seed_override: Option<u64>) {
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
}

fn solve_once_rows(
    spec: &ExperimentSpec,
    seed_override: Option<u64>,
    solvers: &[String],
) -> Result<Vec<CsvRow>, RunError> {
    let instance = spec.instance.as_ref().expect("validated");
    let (params, channels) = instance.build()?;
    let seed = seed_override.unwrap_or(0);
    let mut rows = Vec::new();
    for name in solvers {
        let solver = solver::create(name).map_err(|e| RunError::Config(e.to_string()))?;
        let start = std::time::Instant::now();
        let outcome = solver.solve(&params, &channels);
        let wall = start.elapsed().as_secs_f64();
        let row = match outcome {
            Ok(sol) => CsvRow {
                tau0: sol.time.tau0(),
                sum_rate: sol.sum_rate,
                flags: if sol.degenerate {
                    "degenerate".into()
                } else {
                    String::new()
                },
                wall_time: wall,
                ..base_row(spec.mode, instance, seed, 0, name)
            },
            Err(e) => CsvRow {
                flags: format!("error:{e}"),
                wall_time: wall,
                ..base_row(spec.mode, instance, seed, 0, name)
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

fn base_row(
    mode: Mode,
    instance: &ExplicitInstance,
    seed: u64,
    trial: usize,
    solver: &str,
) -> CsvRow {
    CsvRow {
        mode: mode.label(),
        k: instance.n_users,
        nt: instance.n_antennas,
        alpha: 0.0,
        d_p: 0.0,
        d_s: 0.0,
        p_max_dbm: 10.0 * instance.p_max_w.log10() + 30.0,
        seed,
        trial,
        solver: solver.to_string(),
        tau0: 0.0,
        sum_rate: 0.0,
        wall_time: 0.0,
        flags: String::new(),
    }
}

fn monte_carlo_rows(
    mode: Mode,
    cfg: &ScenarioConfig,
    solvers: &[String],
) -> Result<Vec<CsvRow>, RunError> {
    // one run per solver; identical seeds give identical channel draws
    let mut per_solver = Vec::new();
    for name in solvers {
        let solver = solver::create(name).map_err(|e| RunError::Config(e.to_string()))?;
        let run = sim::run_monte_carlo(cfg, solver.as_ref())
            .map_err(|e| RunError::Runtime(e.to_string()))?;
        per_solver.push((name.clone(), run));
    }
    let mut rows = Vec::new();
    for trial in 0..cfg.n_trials {
        for (name, run) in &per_solver {
            let row = match &run.trials[trial] {
                Ok(t) => CsvRow {
                    mode: mode.label(),
                    k: cfg.n_users,
                    nt: cfg.n_antennas,
                    alpha: cfg.path_loss_exp,
                    d_p: cfg.d_p_m,
                    d_s: cfg.d_s_m,
                    p_max_dbm: cfg.p_max_dbm,
                    seed: cfg.seed,
                    trial,
                    solver: name.clone(),
                    tau0: t.tau0,
                    sum_rate: t.sum_rate,
                    wall_time: t.solver_wall_time,
                    flags: if t.degenerate {
                        "degenerate".into()
                    } else {
                        String::new()
                    },
                },
                Err(fail) => CsvRow {
                    mode: mode.label(),
                    k: cfg.n_users,
                    nt: cfg.n_antennas,
                    alpha: cfg.path_loss_exp,
                    d_p: cfg.d_p_m,
                    d_s: cfg.d_s_m,
                    p_max_dbm: cfg.p_max_dbm,
                    seed: cfg.seed,
                    trial,
                    solver: name.clone(),
                    tau0: 0.0,
                    sum_rate: 0.0,
                    wall_time: 0.0,
                    flags: format!("error:{}", fail.message),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Floats are written with 12 significant digits in scientific notation,
/// which round-trips f64 values deterministically across platforms.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write the rows with the fixed header. UTF-8, `\n` newlines.
pub fn emit_csv(rows: &[CsvRow], path: &Path) -> Result<(), RunError> {
    if rows.is_empty() {
        return Err(RunError::Runtime("no rows to write".into()));
    }
    let mut buf = String::new();
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.mode,
            r.k,
            r.nt,
            sig12(r.alpha),
            sig12(r.d_p),
            sig12(r.d_s),
            sig12(r.p_max_dbm),
            r.seed,
            r.trial,
            r.solver,
            sig12(r.tau0),
            sig12(r.sum_rate),
            sig12(r.wall_time),
            r.flags
        ));
    }
    let mut file = fs::File::create(path)
        .map_err(|e| RunError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(buf.as_bytes())
        .map_err(|e| RunError::Runtime(format!("write {}: {e}", path.display())))?;
    Ok(())
}

/// Group rows by (sweep point, solver) and print mean rate, its standard
/// error and mean wall time.
fn print_summary(spec: &ExperimentSpec, rows: &[CsvRow]) {
    println!("mode: {}", spec.mode.label());
    let mut groups: Vec<(String, Vec<&CsvRow>)> = Vec::new();
    for row in rows {
        let key = format!(
            "K={} d_p={} solver={}",
            row.k,
            fmt_short(row.d_p),
            row.solver
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    for (key, group) in groups {
        let ok: Vec<&&CsvRow> = group
            .iter()
            .filter(|r| !r.flags.starts_with("error"))
            .collect();
        let failed = group.len() - ok.len();
        let (mean, se) = sim::mean_and_se(ok.iter().map(|r| r.sum_rate));
        let wall = if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|r| r.wall_time).sum::<f64>() / ok.len() as f64
        };
        println!(
            "  {key}: trials={} mean_rate={mean:.6} bps/Hz se={se:.2e} mean_wall={wall:.3e} s failed={failed}",
            group.len(),
        );
    }
}

fn fmt_short(x: f64) -> String {
    if x == x.trunc() {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_instance_spec(output: &str) -> ExperimentSpec {
        ExperimentSpec {
            mode: Mode::SolveOnce,
            scenario: None,
            instance: Some(ExplicitInstance {
                n_antennas: 1,
                n_users: 1,
                p_max_w: 1.0,
                noise_w: vec![0.5],
                harvest_eff: vec![0.5],
                snr_gap: 1.0,
                dl: vec![vec![[1.0, 0.0]]],
                ul: vec![[1.0, 0.0]],
            }),
            sweep: vec![],
            output: output.to_string(),
            solvers: vec![],
            measure_time: None,
        }
    }

    #[test]
    fn solve_once_analytic_row() {
        let spec = scalar_instance_spec("out.csv");
        let rows = execute(&spec, None).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!((row.tau0 - 0.632121).abs() < 1e-5, "tau0 {}", row.tau0);
        assert!(
            (row.sum_rate - 0.530738).abs() < 1e-5,
            "rate {}",
            row.sum_rate
        );
        assert_eq!(row.wall_time, 0.0); // timing off by default here
        assert!((row.p_max_dbm - 30.0).abs() < 1e-12);
    }

    #[test]
    fn csv_golden_header_and_shape() {
        let spec = scalar_instance_spec("golden.csv");
        let rows = execute(&spec, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("golden.csv");
        emit_csv(&rows, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let data = lines.next().unwrap();
        assert!(data.starts_with("solve-once,1,1,"));
        // 14 columns, \n endings, no trailing spaces
        assert_eq!(data.split(',').count(), 14);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn rerun_is_byte_identical() {
        let spec = ExperimentSpec {
            mode: Mode::CompareSolvers,
            scenario: Some(ScenarioConfig {
                n_users: 2,
                n_antennas: 2,
                n_trials: 4,
                seed: 9,
                ..Default::default()
            }),
            instance: None,
            sweep: vec![],
            output: "cmp.csv".into(),
            solvers: vec!["fast".into(), "reference".into()],
            measure_time: Some(false),
        };
        let a = execute(&spec, None).unwrap();
        let b = execute(&spec, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        emit_csv(&a, &pa).unwrap();
        emit_csv(&b, &pb).unwrap();
        assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
        // 4 trials x 2 solvers
        assert_eq!(a.len(), 8);
        // ordering: trial-major, solver alphabetical within
        assert_eq!(a[0].solver, "fast");
        assert_eq!(a[1].solver, "reference");
        assert_eq!(a[0].trial, 0);
        assert_eq!(a[2].trial, 1);
    }

    #[test]
    fn sweep_validation_errors_are_config() {
        let mut spec = scalar_instance_spec("x.csv");
        spec.mode = Mode::SweepUsers;
        spec.instance = None;
        spec.scenario = Some(ScenarioConfig::default());
        spec.sweep = vec![];
        match execute(&spec, None) {
            Err(e @ RunError::Config(_)) => assert_eq!(e.exit_code(), 2),
            other => panic!("expected config error, got {other:?}"),
        }
        spec.sweep = vec![2.5];
        assert!(matches!(execute(&spec, None), Err(RunError::Config(_))));
    }

    #[test]
    fn sweep_dp_keeps_station_sink_distance() {
        let spec = ExperimentSpec {
            mode: Mode::SweepDp,
            scenario: Some(ScenarioConfig {
                n_users: 2,
                n_antennas: 2,
                d_p_m: 5.0,
                d_s_m: 5.0,
                n_trials: 2,
                seed: 3,
                ..Default::default()
            }),
            instance: None,
            sweep: vec![8.0, 2.0],
            output: "dp.csv".into(),
            solvers: vec!["fast".into()],
            measure_time: None,
        };
        let rows = execute(&spec, None).unwrap();
        assert_eq!(rows.len(), 4);
        // sorted ascending by sweep value; d_s adjusts to keep d_ps = 10
        assert_eq!(rows[0].d_p, 2.0);
        assert_eq!(rows[0].d_s, 8.0);
        assert_eq!(rows[2].d_p, 8.0);
        assert_eq!(rows[2].d_s, 2.0);
    }

    #[test]
    fn seed_override_applies() {
        let base = ExperimentSpec {
            mode: Mode::CompareSolvers,
            scenario: Some(ScenarioConfig {
                n_users: 2,
                n_antennas: 2,
                n_trials: 2,
                seed: 1,
                ..Default::default()
            }),
            instance: None,
            sweep: vec![],
            output: "s.csv".into(),
            solvers: vec!["fast".into()],
            measure_time: Some(false),
        };
        let a = execute(&base, None).unwrap();
        let b = execute(&base, Some(1)).unwrap();
        let c = execute(&base, Some(2)).unwrap();
        assert_eq!(a[0].sum_rate.to_bits(), b[0].sum_rate.to_bits());
        assert_ne!(a[0].sum_rate.to_bits(), c[0].sum_rate.to_bits());
        assert_eq!(c[0].seed, 2);
    }

    #[test]
    fn unknown_solver_is_config_error() {
        let mut spec = scalar_instance_spec("x.csv");
        spec.solvers = vec!["simplex".into()];
        assert!(matches!(execute(&spec, None), Err(RunError::Config(_))));
    }

    #[test]
    fn spec_json_parses_with_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{\"mode\": \"solve-once\",}").unwrap();
        match load_spec(&path) {
            Err(RunError::Config(msg)) => {
                assert!(
                    msg.contains("line"),
                    "diagnostic should cite location: {msg}"
                )
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
