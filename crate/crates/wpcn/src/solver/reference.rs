//! Independent reference solver for the relaxed joint design problem.
//!
//! Deliberately avoids the fast solver's machinery so the two can act as
//! oracles for each other: instead of the closed-form eigenpair reduction it
//! grids the downlink time fraction, and for each grid point runs a
//! block-coordinate ascent that alternates
//!
//! 1. the closed-form equal-SNR uplink split for the current covariance, and
//! 2. one linearized covariance update: maximize the tangent plane of the
//!    concave rate sum over the trace ball, whose maximizer is rank-one
//!    (`budget * u u^H` with `u` the principal eigenvector of the weighted
//!    channel sum), computed by a dense Hermitian eigendecomposition.
//!
//! The recorded objective (after each time re-split) is nondecreasing, and
//! the final covariance must factor as rank one within `RANK_RATIO_MAX`,
//! which is exactly the tightness property the relaxation is supposed to
//! have. A deterministic-signalling variant runs the same ascent but scores
//! candidates through the combined-beam formula `|h_k^H vbar|^2`; its
//! optimum matching the Gaussian-signalling one is a checkable statement
//! that deterministic power signals cannot improve this system.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::linalg::{self, C64};
use crate::model::{self, ChannelSet, EnergyCovariance, Solution, SystemParams, TimeAllocation};
use crate::solver::Solver;
use crate::tolerances::{
    GRID_EDGE, GRID_POINTS_DEFAULT, RANK_RATIO_MAX, REFINE_ROUNDS_CAP, SCA_INNER_TOL, SCA_ITER_CAP,
    TAU0_OUTER_TOL,
};

/// One recorded ascent step: the objective after the time re-split, the
/// rank ratio `lambda_2 / lambda_1` of the covariance iterate, and the full
/// time split.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub objective: f64,
    pub rank_ratio: f64,
    pub time: Vec<f64>,
}

/// Ascent diagnostics of one solver run.
#[derive(Debug, Clone, Default)]
pub struct SolverTrace {
    pub iterations: Vec<TraceEntry>,
}

impl SolverTrace {
    fn summarized(&self) -> Vec<(f64, f64)> {
        self.iterations
            .iter()
            .map(|e| (e.objective, e.rank_ratio))
            .collect()
    }
}

/// Comparison of the Gaussian-signalling and deterministic-signalling
/// optima on the same instance.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub gaussian_objective: f64,
    pub deterministic_objective: f64,
    pub relative_gap: f64,
}

/// How candidate covariances are scored during the ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RateRoute {
    /// Gaussian signalling: `h_k^H V h_k` through the covariance.
    Trace,
    /// Deterministic signalling: `|h_k^H vbar|^2` through the rank-one beam.
    Scalar,
}

/// One linearized covariance update at a fixed time split. Returns the
/// trace-ball maximizer `tau0 * p_max * u u^H`; a zero downlink slot yields
/// the zero matrix, and when every linearization weight vanishes the input
/// is already a fixed point and is returned unchanged.
pub fn sca_step(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    v_current: &EnergyCovariance,
) -> EnergyCovariance {
    let budget = time.tau0() * params.p_max;
    if budget <= 0.0 {
        return EnergyCovariance::zeros(params.n_antennas);
    }
    let gains: Vec<f64> = (0..params.n_users)
        .map(|k| linalg::quad_form(v_current.matrix(), &channels.dl[k]).max(0.0))
        .collect();
    match sca_direction(params, channels, time, &gains) {
        Some(u) => EnergyCovariance::rank_one(budget, &u),
        None => v_current.clone(),
    }
}

/// Principal direction of the linearized objective
/// `A = sum_k [gamma_k / (1 + gamma_k t_k / tau_k)] h_k h_k^H`,
/// with `t_k` the current effective gains. `None` when `A` vanishes.
fn sca_direction(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    gains: &[f64],
) -> Option<DVector<C64>> {
    let n = params.n_antennas;
    let mut a = DMatrix::<C64>::zeros(n, n);
    let mut any = false;
    for (k, gain) in gains.iter().enumerate() {
        let tau_k = time.tau[k + 1];
        let gamma = channels.gamma[k];
        if tau_k <= 0.0 || gamma <= 0.0 {
            continue;
        }
        let coeff = gamma / (1.0 + gamma * gain.max(0.0) / tau_k);
        if coeff > 0.0 {
            a += linalg::outer(&channels.dl[k]).scale(coeff);
            any = true;
        }
    }
    if !any {
        return None;
    }
    let (vals, vecs) = linalg::hermitian_eigen_desc(&a);
    if vals.first().copied().unwrap_or(0.0) <= 0.0 {
        return None;
    }
    Some(vecs.into_iter().next().unwrap())
}

/// Equal-SNR time split for a fixed covariance (closed form).
pub fn optimal_time_given_v(
    params: &SystemParams,
    channels: &ChannelSet,
    tau0: f64,
    v: &EnergyCovariance,
) -> (TimeAllocation, bool) {
    let gains: Vec<f64> = (0..params.n_users)
        .map(|k| channels.gamma[k] * linalg::quad_form(v.matrix(), &channels.dl[k]).max(0.0))
        .collect();
    ul_split(tau0, &gains)
}

/// `tau_k = (1 - tau0) * w_k / sum(w)`; all-zero weights flag degenerate.
fn ul_split(tau0: f64, weights: &[f64]) -> (TimeAllocation, bool) {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    let mut tau = Vec::with_capacity(weights.len() + 1);
    tau.push(tau0);
    if total <= 0.0 {
        tau.extend(std::iter::repeat_n(0.0, weights.len()));
        return (TimeAllocation { tau }, true);
    }
    let rest = 1.0 - tau0;
    tau.extend(weights.iter().map(|w| rest * w.max(0.0) / total));
    (TimeAllocation { tau }, false)
}

struct AscentRun {
    objective: f64,
    v: EnergyCovariance,
    beam: Option<DVector<C64>>,
    time: TimeAllocation,
    trace: SolverTrace,
}

/// Grid-plus-ascent solver, used as the oracle against the fast
/// semi-closed-form path.
#[derive(Debug, Clone)]
pub struct ReferenceSolver {
    /// Grid points per bracketing round over the downlink time fraction.
    pub n_grid: usize,
    /// Absolute objective change that ends one ascent run.
    pub inner_tol: f64,
    /// Bracket width on tau0 at which refinement stops.
    pub outer_tol: f64,
    /// Ascent iteration cap per grid point.
    pub max_sca_iters: usize,
}

impl Default for ReferenceSolver {
    fn default() -> Self {
        Self {
            n_grid: GRID_POINTS_DEFAULT,
            inner_tol: SCA_INNER_TOL,
            outer_tol: TAU0_OUTER_TOL,
            max_sca_iters: SCA_ITER_CAP,
        }
    }
}

impl ReferenceSolver {
    fn check_config(&self) -> Result<(), Error> {
        if self.n_grid < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 grid points, got {}",
                self.n_grid
            )));
        }
        if self.inner_tol.is_nan()
            || self.inner_tol <= 0.0
            || self.outer_tol.is_nan()
            || self.outer_tol <= 0.0
        {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Solve by gridding tau0 and running the ascent at each point, then
    /// re-bracketing around the incumbent until the bracket is narrower
    /// than `outer_tol`. Returns the solution and the ascent trace of the
    /// winning grid point.
    pub fn solve_bca(
        &self,
        params: &SystemParams,
        channels: &ChannelSet,
    ) -> Result<(Solution, SolverTrace), Error> {
        self.solve_route(params, channels, RateRoute::Trace)
    }

    /// Solve the deterministic-signalling formulation (same relaxation,
    /// scored through the combined beam) and report how its optimum
    /// compares with the Gaussian-signalling one.
    pub fn solve_deterministic(
        &self,
        params: &SystemParams,
        channels: &ChannelSet,
    ) -> Result<(Solution, EquivalenceReport), Error> {
        let (gauss, _) = self.solve_route(params, channels, RateRoute::Trace)?;
        let (det, _) = self.solve_route(params, channels, RateRoute::Scalar)?;
        let denom = gauss.sum_rate.abs().max(f64::MIN_POSITIVE);
        let report = EquivalenceReport {
            gaussian_objective: gauss.sum_rate,
            deterministic_objective: det.sum_rate,
            relative_gap: (det.sum_rate - gauss.sum_rate).abs() / denom,
        };
        Ok((det, report))
    }

    fn solve_route(
        &self,
        params: &SystemParams,
        channels: &ChannelSet,
        route: RateRoute,
    ) -> Result<(Solution, SolverTrace), Error> {
        self.check_config()?;
        let usable = (0..params.n_users)
            .any(|k| channels.gamma[k] > 0.0 && channels.dl[k].norm_squared() > 0.0);
        if !usable {
            return Ok((
                Solution::degenerate(params.n_antennas, params.n_users),
                SolverTrace::default(),
            ));
        }

        let mut lo = GRID_EDGE;
        let mut hi = 1.0 - GRID_EDGE;
        let mut best_tau0 = lo;
        for _round in 0..=REFINE_ROUNDS_CAP {
            let points = linspace(lo, hi, self.n_grid);
            let mut best_idx = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (i, &tau0) in points.iter().enumerate() {
                let run = self.ascend(params, channels, tau0, route, false);
                if run.objective > best_val {
                    best_val = run.objective;
                    best_idx = i;
                }
            }
            best_tau0 = points[best_idx];
            let new_lo = points[best_idx.saturating_sub(1)];
            let new_hi = points[(best_idx + 1).min(points.len() - 1)];
            if new_hi - new_lo <= self.outer_tol {
                break;
            }
            lo = new_lo;
            hi = new_hi;
        }

        let run = self.ascend(params, channels, best_tau0, route, true);
        self.extract(params, channels, best_tau0, run)
    }

    /// Block-coordinate ascent at a fixed tau0. Each pass re-splits the
    /// uplink time for the current covariance (closed form) and then takes
    /// one linearized covariance step. The objective recorded after the
    /// time re-split is nondecreasing across passes.
    fn ascend(
        &self,
        params: &SystemParams,
        channels: &ChannelSet,
        tau0: f64,
        route: RateRoute,
        record: bool,
    ) -> AscentRun {
        let n = params.n_antennas;
        let budget = tau0 * params.p_max;
        let (mut v, mut beam) = match route {
            RateRoute::Trace => (
                EnergyCovariance::scaled_identity(budget / n as f64, n),
                None,
            ),
            RateRoute::Scalar => {
                let u0 = DVector::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
                let b = u0.map(|z| z * C64::new(budget.sqrt(), 0.0));
                (EnergyCovariance::rank_one(budget, &u0), Some(b))
            }
        };
        let mut trace = SolverTrace::default();
        let mut prev = f64::NEG_INFINITY;
        let mut steps = 0;
        let (objective, time) = loop {
            let gains: Vec<f64> = match (&route, &beam) {
                (RateRoute::Scalar, Some(b)) => (0..params.n_users)
                    .map(|k| channels.dl[k].dotc(b).norm_sqr())
                    .collect(),
                _ => (0..params.n_users)
                    .map(|k| linalg::quad_form(v.matrix(), &channels.dl[k]).max(0.0))
                    .collect(),
            };
            let weights: Vec<f64> = gains
                .iter()
                .zip(&channels.gamma)
                .map(|(t, g)| g * t)
                .collect();
            let (t_alloc, _degen) = ul_split(tau0, &weights);
            let objective = match (&route, &beam) {
                (RateRoute::Scalar, Some(b)) => {
                    model::deterministic_objective(params, channels, &t_alloc, b)
                }
                _ => model::objective_with_cov(params, channels, &t_alloc, &v),
            };
            if record {
                trace.iterations.push(TraceEntry {
                    objective,
                    rank_ratio: rank_ratio(&v),
                    time: t_alloc.tau.clone(),
                });
            }
            if objective - prev < self.inner_tol || steps >= self.max_sca_iters {
                break (objective, t_alloc);
            }
            prev = objective;
            steps += 1;
            if let Some(u) = sca_direction(params, channels, &t_alloc, &gains) {
                v = EnergyCovariance::rank_one(budget, &u);
                if route == RateRoute::Scalar {
                    beam = Some(u.map(|z| z * C64::new(budget.sqrt(), 0.0)));
                }
            }
        };
        AscentRun {
            objective,
            v,
            beam,
            time,
            trace,
        }
    }

    /// Factor the converged covariance as rank one and build the solution.
    fn extract(
        &self,
        params: &SystemParams,
        channels: &ChannelSet,
        tau0: f64,
        run: AscentRun,
    ) -> Result<(Solution, SolverTrace), Error> {
        let (vals, vecs) = linalg::hermitian_eigen_desc(run.v.matrix());
        let lam1 = vals.first().copied().unwrap_or(0.0).max(0.0);
        if lam1 <= 0.0 {
            return Ok((
                Solution::degenerate(params.n_antennas, params.n_users),
                run.trace,
            ));
        }
        let lam2 = vals.get(1).copied().unwrap_or(0.0).max(0.0);
        let ratio = lam2 / lam1;
        if ratio > RANK_RATIO_MAX {
            return Err(Error::RelaxationNotTight {
                rank_ratio: ratio,
                trace: run.trace.summarized(),
            });
        }
        let vfac = vecs[0].map(|z| z * C64::new(lam1.sqrt(), 0.0));
        let beamformer = vfac.map(|z| z / C64::new(tau0.sqrt(), 0.0));
        let rates: Vec<f64> = match &run.beam {
            Some(b) => (0..params.n_users)
                .map(|k| model::deterministic_user_rate(params, channels, &run.time, b, k))
                .collect(),
            None => (0..params.n_users)
                .map(|k| model::user_rate(params, channels, &run.time, &run.v, k))
                .collect(),
        };
        let sum_rate = rates.iter().sum();
        Ok((
            Solution {
                time: run.time,
                beamformer,
                rates,
                sum_rate,
                degenerate: false,
            },
            run.trace,
        ))
    }
}

impl Solver for ReferenceSolver {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn solve(&self, params: &SystemParams, channels: &ChannelSet) -> Result<Solution, Error> {
        self.solve_bca(params, channels).map(|(sol, _)| sol)
    }
}

/// Registry wrapper that exposes the deterministic-signalling route as its
/// own strategy.
#[derive(Debug, Clone, Default)]
pub struct DeterministicSolver {
    pub inner: ReferenceSolver,
}

impl Solver for DeterministicSolver {
    fn name(&self) -> &'static str {
        "deterministic"
    }

    fn solve(&self, params: &SystemParams, channels: &ChannelSet) -> Result<Solution, Error> {
        self.inner
            .solve_deterministic(params, channels)
            .map(|(sol, _)| sol)
    }
}

/// `lambda_2 / lambda_1` of a covariance iterate; zero matrices count as
/// rank one.
fn rank_ratio(v: &EnergyCovariance) -> f64 {
    let (vals, _) = linalg::hermitian_eigen_desc(v.matrix());
    let lam1 = vals.first().copied().unwrap_or(0.0).max(0.0);
    if lam1 <= 0.0 {
        return 0.0;
    }
    vals.get(1).copied().unwrap_or(0.0).max(0.0) / lam1
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}
