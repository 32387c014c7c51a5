//! Semi-closed-form solver.
//!
//! The joint design collapses to a one-dimensional concave problem once the
//! SNR-equalizing uplink split is substituted in: stack the scaled downlink
//! channels into `G = [sqrt(gamma_1) h_1, ..., sqrt(gamma_K) h_K]`, take the
//! principal eigenpair of the Gram matrix `G G^H`, and maximize
//!
//! `f(tau0) = (1 - tau0) * log2(1 + p_max * lambda_max * tau0 / (1 - tau0))`
//!
//! over the downlink time fraction by golden-section search. The beam is the
//! principal eigenvector at full power and the uplink slots follow in closed
//! form from the equal-SNR condition.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::linalg::{self, C64};
use crate::model::{log2_1p, ChannelSet, EnergyCovariance, Solution, SystemParams, TimeAllocation};
use crate::solver::Solver;
use crate::tolerances::{
    EIG_RESIDUAL_REL, GOLDEN_TOL_DEFAULT, POWER_ITER_CAP, POWER_ITER_TOL, TAU_DOMAIN_EPS,
};

/// The stacked effective downlink channel and the principal eigenpair of its
/// Gram matrix.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// `n_antennas x n_users` matrix with columns `sqrt(gamma_k) h_k`.
    pub g_matrix: DMatrix<C64>,
    /// Largest eigenvalue of `G G^H`.
    pub lambda_max: f64,
    /// Unit-norm principal eigenvector of `G G^H`, phase-normalized.
    pub principal_vec: DVector<C64>,
}

/// Stack the per-user channels scaled by their effective gains and compute
/// the principal eigenpair of the resulting Gram matrix.
pub fn build_effective_channel(
    params: &SystemParams,
    channels: &ChannelSet,
) -> Result<EffectiveChannel, Error> {
    let mut g = DMatrix::<C64>::zeros(params.n_antennas, params.n_users);
    for k in 0..params.n_users {
        let w = channels.gamma[k].max(0.0).sqrt();
        g.column_mut(k)
            .copy_from(&channels.dl[k].map(|z| z * C64::new(w, 0.0)));
    }
    let gram = &g * g.adjoint();
    let (lambda_max, principal_vec) = principal_eigenpair(&gram)?;
    Ok(EffectiveChannel {
        g_matrix: g,
        lambda_max,
        principal_vec,
    })
}

/// Principal eigenpair of a Hermitian PSD matrix by power iteration with a
/// deterministic start vector.
///
/// Converges to a residual of `POWER_ITER_TOL * lambda`; if the iteration
/// cap is reached (nearly degenerate leading eigenvalues) the pair is still
/// accepted as long as the residual meets `EIG_RESIDUAL_REL * lambda`,
/// otherwise a [`Error::NonConvergence`] reports the residual.
pub fn principal_eigenpair(m: &DMatrix<C64>) -> Result<(f64, DVector<C64>), Error> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "eigenpair needs a nonempty square matrix".into(),
        ));
    }
    if !linalg::is_hermitian(m) {
        return Err(Error::InvalidArgument(
            "eigenpair input is not Hermitian".into(),
        ));
    }
    let n = m.nrows();
    let scale = linalg::max_entry_norm(m);
    if scale == 0.0 {
        // Zero matrix: lambda 0, canonical first basis vector.
        let mut e = DVector::zeros(n);
        e[0] = C64::new(1.0, 0.0);
        return Ok((0.0, e));
    }

    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v = deterministic_start(n, &mut state);
    let mut lambda;
    let mut iter = 0;
    loop {
        let w = m * &v;
        lambda = v.dotc(&w).re.max(0.0);
        let residual = (&w - v.map(|z| z * C64::new(lambda, 0.0))).norm();
        if residual <= POWER_ITER_TOL * lambda.max(f64::MIN_POSITIVE) {
            break;
        }
        iter += 1;
        if iter >= POWER_ITER_CAP {
            if residual > EIG_RESIDUAL_REL * lambda.max(f64::MIN_POSITIVE) {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual,
                });
            }
            break;
        }
        let norm = w.norm();
        if norm == 0.0 {
            // start vector fell in the null space; redraw
            v = deterministic_start(n, &mut state);
        } else {
            v = w.unscale(norm);
        }
    }
    linalg::phase_normalize(&mut v);
    Ok((lambda, v))
}

fn deterministic_start(n: usize, state: &mut u64) -> DVector<C64> {
    let mut v = DVector::from_fn(n, |_, _| {
        let re = splitmix_unit(state) - 0.5;
        let im = splitmix_unit(state) - 0.5;
        C64::new(re, im)
    });
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    } else {
        v[0] = C64::new(1.0, 0.0);
    }
    v
}

/// SplitMix64 step mapped to [0, 1); fixed-sequence start vectors keep the
/// iteration deterministic.
fn splitmix_unit(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// The reduced scalar objective `(1 - tau0) * log2(1 + c * tau0 / (1 - tau0))`
/// with `c = p_max * lambda_max`; endpoints take their continuity value 0.
pub fn reduced_objective(tau0: f64, c: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&tau0) {
        return Err(Error::InvalidArgument(format!(
            "tau0 must lie in [0, 1], got {tau0}"
        )));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "effective gain c must be finite and nonnegative, got {c}"
        )));
    }
    Ok(reduced_objective_at(tau0, c))
}

fn reduced_objective_at(tau0: f64, c: f64) -> f64 {
    if tau0 <= 0.0 || tau0 >= 1.0 {
        return 0.0;
    }
    let rest = 1.0 - tau0;
    rest * log2_1p(c * tau0 / rest)
}

/// Maximize the reduced objective over `tau0` in [0, 1] by golden-section
/// search down to an interval width of `tol`. Degenerate `c <= 0` returns
/// `(0, 0)`.
pub fn maximize_tau0(c: f64, tol: f64) -> (f64, f64) {
    if c.is_nan() || c <= 0.0 {
        return (0.0, 0.0);
    }
    let tol = tol.max(4.0 * f64::EPSILON);
    const INVPHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2
    let mut a = TAU_DOMAIN_EPS;
    let mut b = 1.0 - TAU_DOMAIN_EPS;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = reduced_objective_at(x1, c);
    let mut f2 = reduced_objective_at(x2, c);
    let mut iters = 0;
    while b - a > tol && iters < 200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = reduced_objective_at(x2, c);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = reduced_objective_at(x1, c);
        }
        iters += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Equal-SNR uplink split: `tau_k = (1 - tau0) * w_k / sum(w)` for
/// nonnegative weights `w_k = gamma_k * h_k^H V h_k`. All-zero weights are
/// degenerate and yield all-zero slots with the flag set.
pub fn allocate_ul_time(tau0: f64, weights: &[f64]) -> (Vec<f64>, bool) {
    debug_assert!((0.0..=1.0).contains(&tau0));
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return (vec![0.0; weights.len()], true);
    }
    let rest = 1.0 - tau0;
    let tau = weights.iter().map(|w| rest * w.max(0.0) / total).collect();
    (tau, false)
}

/// Solver strategy implementing the semi-closed-form procedure.
#[derive(Debug, Clone)]
pub struct FastSolver {
    /// Golden-section interval width on the downlink time fraction.
    pub golden_tol: f64,
}

impl Default for FastSolver {
    fn default() -> Self {
        Self {
            golden_tol: GOLDEN_TOL_DEFAULT,
        }
    }
}

impl FastSolver {
    pub fn new(golden_tol: f64) -> Self {
        Self { golden_tol }
    }

    pub fn solve(&self, params: &SystemParams, channels: &ChannelSet) -> Result<Solution, Error> {
        let eff = build_effective_channel(params, channels)?;
        let c = params.p_max * eff.lambda_max;
        if c <= 0.0 {
            return Ok(Solution::degenerate(params.n_antennas, params.n_users));
        }
        let (tau0, _value) = maximize_tau0(c, self.golden_tol);
        let cov = EnergyCovariance::rank_one(tau0 * params.p_max, &eff.principal_vec);
        let weights: Vec<f64> = (0..params.n_users)
            .map(|k| channels.gamma[k] * linalg::quad_form(cov.matrix(), &channels.dl[k]).max(0.0))
            .collect();
        let (ul, degenerate) = allocate_ul_time(tau0, &weights);
        let mut tau = Vec::with_capacity(params.n_users + 1);
        tau.push(tau0);
        tau.extend_from_slice(&ul);
        let time = TimeAllocation::new(tau)?;
        let beamformer = eff
            .principal_vec
            .map(|z| z * C64::new(params.p_max.sqrt(), 0.0));
        let rates: Vec<f64> = (0..params.n_users)
            .map(|k| crate::model::user_rate(params, channels, &time, &cov, k))
            .collect();
        let sum_rate = rates.iter().sum();
        Ok(Solution {
            time,
            beamformer,
            rates,
            sum_rate,
            degenerate,
        })
    }
}

impl Solver for FastSolver {
    fn name(&self) -> &'static str {
        "fast"
    }

    fn solve(&self, params: &SystemParams, channels: &ChannelSet) -> Result<Solution, Error> {
        FastSolver::solve(self, params, channels)
    }
}
