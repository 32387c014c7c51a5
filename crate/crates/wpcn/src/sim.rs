//! Scenario geometry, fading channel generation and the seeded Monte-Carlo
//! harness.
//!
//! Geometry: the `K` users sit on a line segment of length `line_length_m`
//! centered at the origin; the power station is at `(0, +d_p)` and the sink
//! at `(0, -d_s)` on opposite sides of the perpendicular bisector, so the
//! station-to-sink distance is `d_p + d_s`.
//!
//! Channels: the downlink is Rician with a steering-vector line-of-sight
//! component and i.i.d. complex Gaussian scattering, normalized so every
//! entry has mean power `1e-3 * d^-alpha`; the uplink is Rayleigh with mean
//! power `1e-3 * d^-alpha`.
//!
//! Reproducibility: every (trial, user, link) triple owns its own
//! counter-based RNG stream derived from the scenario seed, so results are
//! identical regardless of execution order or thread count.

use std::time::Instant;

use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::C64;
use crate::model::{ChannelSet, SystemParams};
use crate::solver::Solver;

/// Everything needed to generate instances: geometry, fading and radio
/// constants (dB/dBm at this boundary only), Monte-Carlo controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_users: usize,
    pub n_antennas: usize,
    /// Span of the user line in meters.
    pub line_length_m: f64,
    /// Perpendicular distance of the power station, meters.
    pub d_p_m: f64,
    /// Perpendicular distance of the sink, meters.
    pub d_s_m: f64,
    pub path_loss_exp: f64,
    /// Rician K-factor of the downlink (LOS-to-scatter power ratio).
    pub rician_k: f64,
    pub p_max_dbm: f64,
    pub noise_dbm: f64,
    pub harvest_eff: f64,
    pub snr_gap_db: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_users: 4,
            n_antennas: 4,
            line_length_m: 10.0,
            d_p_m: 5.0,
            d_s_m: 5.0,
            path_loss_exp: 3.0,
            rician_k: 3.0,
            p_max_dbm: 30.0,
            noise_dbm: -70.0,
            harvest_eff: 0.5,
            snr_gap_db: 9.8,
            n_trials: 1000,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_users == 0 || self.n_antennas == 0 {
            return Err(Error::InvalidArgument(
                "scenario needs at least one user and one antenna".into(),
            ));
        }
        if self.line_length_m <= 0.0 || self.d_p_m <= 0.0 || self.d_s_m <= 0.0 {
            return Err(Error::InvalidArgument(
                "all scenario distances must be positive".into(),
            ));
        }
        if self.path_loss_exp < 0.0 || self.rician_k < 0.0 {
            return Err(Error::InvalidArgument(
                "path loss exponent and Rician factor must be nonnegative".into(),
            ));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        Ok(())
    }

    /// Convert the dB-scale radio constants into linear system parameters.
    pub fn system_params(&self) -> Result<SystemParams, Error> {
        SystemParams::uniform(
            self.n_antennas,
            self.n_users,
            dbm_to_watts(self.p_max_dbm),
            dbm_to_watts(self.noise_dbm),
            self.harvest_eff,
            db_to_linear(self.snr_gap_db),
        )
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Positions of the users along the line: evenly spaced over
/// `[-L/2, +L/2]` including the endpoints; a single user sits at the
/// center.
pub fn user_positions(config: &ScenarioConfig) -> Vec<f64> {
    let k = config.n_users;
    let l = config.line_length_m;
    if k == 1 {
        return vec![0.0];
    }
    (0..k)
        .map(|i| -l / 2.0 + l * i as f64 / (k - 1) as f64)
        .collect()
}

fn dl_distance(config: &ScenarioConfig, x: f64) -> f64 {
    x.hypot(config.d_p_m)
}

fn ul_distance(config: &ScenarioConfig, x: f64) -> f64 {
    x.hypot(config.d_s_m)
}

/// Which link a RNG stream feeds.
#[derive(Debug, Clone, Copy)]
pub enum Link {
    Downlink = 0,
    Uplink = 1,
}

/// Independent, order-insensitive RNG stream for one (trial, user, link)
/// triple. ChaCha streams are cheap to seek, so parallel trials reproduce
/// the sequential draws bit for bit.
pub fn substream(seed: u64, trial: u64, user: u32, link: Link) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 16) | ((user as u64) << 2) | link as u64);
    rng
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    // unit mean-square: E|z|^2 = 1
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(
        re * std::f64::consts::FRAC_1_SQRT_2,
        im * std::f64::consts::FRAC_1_SQRT_2,
    )
}

/// Draw the Rician downlink vector of one user. The LOS part is the array
/// steering vector toward the user (broadside points at the line's
/// midpoint); each entry is normalized to mean power `1e-3 * d^-alpha`.
pub fn gen_dl_channel(
    config: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
    user_index: usize,
) -> DVector<C64> {
    let x = user_positions(config)[user_index];
    let d = dl_distance(config, x);
    let sin_beta = x / d;
    let phase_step = -std::f64::consts::PI * sin_beta;
    let kr = config.rician_k;
    let los_w = (kr / (1.0 + kr)).sqrt();
    let nlos_w = (1.0 / (1.0 + kr)).sqrt();
    let scale = (1e-3 * d.powf(-config.path_loss_exp)).sqrt();
    DVector::from_fn(config.n_antennas, |i, _| {
        let los = C64::from_polar(1.0, i as f64 * phase_step);
        let nlos = complex_gaussian(rng);
        (los * C64::new(los_w, 0.0) + nlos * C64::new(nlos_w, 0.0)) * C64::new(scale, 0.0)
    })
}

/// Draw the Rayleigh uplink scalar of one user, mean power
/// `1e-3 * d^-alpha` with `d` the sink distance.
pub fn gen_ul_channel(config: &ScenarioConfig, rng: &mut ChaCha8Rng, user_index: usize) -> C64 {
    let x = user_positions(config)[user_index];
    let d = ul_distance(config, x);
    let scale = (1e-3 * d.powf(-config.path_loss_exp)).sqrt();
    complex_gaussian(rng) * C64::new(scale, 0.0)
}

/// Generate the full channel set of one trial from its dedicated streams.
pub fn gen_channels(
    config: &ScenarioConfig,
    params: &SystemParams,
    trial: u64,
) -> Result<ChannelSet, Error> {
    let mut dl = Vec::with_capacity(config.n_users);
    let mut ul = Vec::with_capacity(config.n_users);
    for k in 0..config.n_users {
        let mut rng_dl = substream(config.seed, trial, k as u32, Link::Downlink);
        dl.push(gen_dl_channel(config, &mut rng_dl, k));
        let mut rng_ul = substream(config.seed, trial, k as u32, Link::Uplink);
        ul.push(gen_ul_channel(config, &mut rng_ul, k));
    }
    ChannelSet::new(params, dl, ul)
}

/// Outcome of one solved trial. Wall time covers the solver call only,
/// not channel generation.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial_index: usize,
    pub sum_rate: f64,
    pub tau0: f64,
    pub solver_wall_time: f64,
    pub degenerate: bool,
}

/// A trial whose solve failed; recorded, never fatal.
#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub trial_index: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub n_trials: usize,
    pub n_failed: usize,
    pub mean_sum_rate: f64,
    /// Standard error of the mean sum rate over successful trials.
    pub std_error: f64,
    pub mean_wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub trials: Vec<Result<TrialResult, TrialFailure>>,
    pub summary: MonteCarloSummary,
}

/// Solve `n_trials` independent channel draws with the given strategy.
/// Trials run in parallel; identical config and seed give bit-identical
/// channel draws and results at any thread count.
pub fn run_monte_carlo(
    config: &ScenarioConfig,
    solver: &dyn Solver,
) -> Result<MonteCarloRun, Error> {
    config.validate()?;
    let params = config.system_params()?;
    let trials: Vec<Result<TrialResult, TrialFailure>> = (0..config.n_trials)
        .into_par_iter()
        .map(|trial| {
            let channels =
                gen_channels(config, &params, trial as u64).map_err(|e| TrialFailure {
                    trial_index: trial,
                    message: e.to_string(),
                })?;
            let start = Instant::now();
            let solution = solver.solve(&params, &channels).map_err(|e| TrialFailure {
                trial_index: trial,
                message: e.to_string(),
            })?;
            let wall = start.elapsed().as_secs_f64();
            Ok(TrialResult {
                trial_index: trial,
                sum_rate: solution.sum_rate,
                tau0: solution.time.tau0(),
                solver_wall_time: wall,
                degenerate: solution.degenerate,
            })
        })
        .collect();

    let ok: Vec<&TrialResult> = trials.iter().filter_map(|t| t.as_ref().ok()).collect();
    let n_failed = trials.len() - ok.len();
    let (mean, se) = mean_and_se(ok.iter().map(|t| t.sum_rate));
    let mean_wall = if ok.is_empty() {
        0.0
    } else {
        ok.iter().map(|t| t.solver_wall_time).sum::<f64>() / ok.len() as f64
    };
    Ok(MonteCarloRun {
        summary: MonteCarloSummary {
            n_trials: trials.len(),
            n_failed,
            mean_sum_rate: mean,
            std_error: se,
            mean_wall_time: mean_wall,
        },
        trials,
    })
}

/// Sample mean and standard error (sample standard deviation over sqrt n).
pub fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = values.collect();
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
