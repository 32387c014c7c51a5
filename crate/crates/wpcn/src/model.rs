//! Domain types and the closed-form physical-layer formulas of the
//! harvest-then-transmit frame: harvested energy, average uplink power and
//! per-user throughput.
//!
//! Conventions baked in here and relied on everywhere else:
//!
//! * All powers are linear watts; dB/dBm conversion happens only at config
//!   parsing boundaries.
//! * Rates are bps/Hz with base-2 logarithms.
//! * A user with a zero uplink slot contributes zero rate (the continuous
//!   extension of `tau * log2(1 + c / tau)` at `tau = 0`).
//! * Receiver noise during the power-transfer phase is neglected.

use std::f64::consts::LN_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::linalg::{self, C64};
use crate::tolerances::{
    HERMITIAN_TOL, POWER_BUDGET_REL, PSD_EIG_FLOOR, RATE_SUM_REL, TIME_BUDGET_SLACK,
};

/// Static network parameters: antenna/user counts, the power budget and the
/// per-user receiver constants.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Transmit antennas at the power station.
    pub n_antennas: usize,
    /// Number of user nodes.
    pub n_users: usize,
    /// Transmit power budget in watts.
    pub p_max: f64,
    /// Per-user sink noise power in watts.
    pub noise_power: Vec<f64>,
    /// Per-user energy harvesting efficiency, strictly inside (0, 1).
    pub harvest_eff: Vec<f64>,
    /// SNR gap of the practical modulation/coding scheme, linear, >= 1.
    pub snr_gap: f64,
}

impl SystemParams {
    pub fn new(
        n_antennas: usize,
        n_users: usize,
        p_max: f64,
        noise_power: Vec<f64>,
        harvest_eff: Vec<f64>,
        snr_gap: f64,
    ) -> Result<Self, Error> {
        if n_antennas == 0 || n_users == 0 {
            return Err(Error::InvalidArgument(
                "antenna and user counts must be at least 1".into(),
            ));
        }
        if !p_max.is_finite() || p_max <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "p_max must be a positive finite wattage, got {p_max}"
            )));
        }
        if noise_power.len() != n_users || harvest_eff.len() != n_users {
            return Err(Error::InvalidArgument(format!(
                "need {n_users} per-user noise/harvest entries, got {}/{}",
                noise_power.len(),
                harvest_eff.len()
            )));
        }
        if noise_power.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidArgument(
                "every noise power must be positive and finite".into(),
            ));
        }
        if harvest_eff
            .iter()
            .any(|x| x.is_nan() || *x <= 0.0 || *x >= 1.0)
        {
            return Err(Error::InvalidArgument(
                "every harvest efficiency must lie strictly inside (0, 1)".into(),
            ));
        }
        if !snr_gap.is_finite() || snr_gap < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "snr_gap must be >= 1 on the linear scale, got {snr_gap}"
            )));
        }
        Ok(Self {
            n_antennas,
            n_users,
            p_max,
            noise_power,
            harvest_eff,
            snr_gap,
        })
    }

    /// Convenience constructor with identical per-user constants.
    pub fn uniform(
        n_antennas: usize,
        n_users: usize,
        p_max: f64,
        noise_power: f64,
        harvest_eff: f64,
        snr_gap: f64,
    ) -> Result<Self, Error> {
        Self::new(
            n_antennas,
            n_users,
            p_max,
            vec![noise_power; n_users],
            vec![harvest_eff; n_users],
            snr_gap,
        )
    }
}

/// One realization of all channels: downlink vectors `h_k`, uplink scalars
/// `g_k` and the derived effective gains `gamma_k`.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Downlink channel vector per user, length `n_antennas`.
    pub dl: Vec<DVector<C64>>,
    /// Uplink channel scalar per user.
    pub ul: Vec<C64>,
    /// Effective uplink gain per user: `harvest_eff * |ul|^2 / (snr_gap * noise)`.
    pub gamma: Vec<f64>,
}

impl ChannelSet {
    pub fn new(params: &SystemParams, dl: Vec<DVector<C64>>, ul: Vec<C64>) -> Result<Self, Error> {
        if dl.len() != params.n_users || ul.len() != params.n_users {
            return Err(Error::InvalidArgument(format!(
                "need {} users worth of channels, got {} downlink / {} uplink",
                params.n_users,
                dl.len(),
                ul.len()
            )));
        }
        for (k, h) in dl.iter().enumerate() {
            if h.len() != params.n_antennas {
                return Err(Error::InvalidArgument(format!(
                    "downlink vector {k} has length {}, expected {}",
                    h.len(),
                    params.n_antennas
                )));
            }
            if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "downlink vector {k} has non-finite entries"
                )));
            }
        }
        if ul.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("uplink gains must be finite".into()));
        }
        let gamma = ul
            .iter()
            .enumerate()
            .map(|(k, g)| compute_gamma(params, *g, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { dl, ul, gamma })
    }
}

/// Effective uplink gain of user `k`:
/// `gamma_k = harvest_eff_k * |g|^2 / (snr_gap * noise_k)`.
///
/// Nonnegative, and zero exactly when the uplink gain vanishes.
pub fn compute_gamma(params: &SystemParams, ul_gain: C64, user_index: usize) -> Result<f64, Error> {
    if user_index >= params.n_users {
        return Err(Error::InvalidArgument(format!(
            "user index {user_index} out of range (K = {})",
            params.n_users
        )));
    }
    Ok(params.harvest_eff[user_index] * ul_gain.norm_sqr()
        / (params.snr_gap * params.noise_power[user_index]))
}

/// Fractions of the unit frame: `tau[0]` is the downlink power-transfer
/// slot, `tau[1..]` the per-user uplink slots.
#[derive(Debug, Clone)]
pub struct TimeAllocation {
    pub tau: Vec<f64>,
}

impl TimeAllocation {
    pub fn new(tau: Vec<f64>) -> Result<Self, Error> {
        if tau.is_empty() {
            return Err(Error::InvalidArgument("empty time allocation".into()));
        }
        if tau.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(
                "every time fraction must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = tau.iter().sum();
        if total > 1.0 + TIME_BUDGET_SLACK {
            return Err(Error::InvalidArgument(format!(
                "time fractions sum to {total}, above the unit frame"
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau0(&self) -> f64 {
        self.tau[0]
    }

    /// Uplink slots `tau_1 ... tau_K`.
    pub fn ul(&self) -> &[f64] {
        &self.tau[1..]
    }

    pub fn n_users(&self) -> usize {
        self.tau.len() - 1
    }
}

/// A candidate design: the time split, the single energy beam `w`, and the
/// rates it achieves.
#[derive(Debug, Clone)]
pub struct Solution {
    pub time: TimeAllocation,
    /// Downlink energy beamformer, length `n_antennas`, `||w||^2 <= p_max`.
    pub beamformer: DVector<C64>,
    /// Per-user throughput in bps/Hz.
    pub rates: Vec<f64>,
    /// Sum of `rates`.
    pub sum_rate: f64,
    /// Set when the instance carried no usable channel energy and the
    /// all-zero design was returned canonically.
    pub degenerate: bool,
}

impl Solution {
    /// The all-zero design for instances with no harvestable energy.
    pub fn degenerate(n_antennas: usize, n_users: usize) -> Self {
        Self {
            time: TimeAllocation {
                tau: vec![0.0; n_users + 1],
            },
            beamformer: DVector::zeros(n_antennas),
            rates: vec![0.0; n_users],
            sum_rate: 0.0,
            degenerate: true,
        }
    }
}

/// Hermitian PSD transmit covariance with a trace budget. Construction
/// validates (or guarantees by construction) symmetry and positive
/// semidefiniteness, so downstream formulas can trust the invariants.
#[derive(Debug, Clone)]
pub struct EnergyCovariance {
    v: DMatrix<C64>,
}

impl EnergyCovariance {
    /// Validating constructor: Hermitian within `HERMITIAN_TOL` and
    /// eigenvalues above `-PSD_EIG_FLOOR` (both scaled by the matrix size).
    pub fn new(v: DMatrix<C64>) -> Result<Self, Error> {
        if !v.is_square() {
            return Err(Error::InvalidArgument("covariance must be square".into()));
        }
        let scale = linalg::max_entry_norm(&v).max(1.0);
        let defect = linalg::hermitian_defect(&v);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "covariance is not Hermitian (defect {defect:.3e})"
            )));
        }
        let (eigs, _) = linalg::hermitian_eigen_desc(&v);
        let floor = -PSD_EIG_FLOOR * eigs.first().copied().unwrap_or(0.0).abs().max(1.0);
        if let Some(min) = eigs.last() {
            if *min < floor {
                return Err(Error::InvalidArgument(format!(
                    "covariance is not PSD (eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(Self { v })
    }

    /// `scale * dir * dir^H` for a unit-norm direction; PSD by construction.
    pub fn rank_one(scale: f64, dir: &DVector<C64>) -> Self {
        debug_assert!(scale >= 0.0);
        let mut v = linalg::outer(dir);
        v.scale_mut(scale);
        Self { v }
    }

    /// `scale * I`; PSD by construction.
    pub fn scaled_identity(scale: f64, n: usize) -> Self {
        debug_assert!(scale >= 0.0);
        Self {
            v: DMatrix::identity(n, n).scale(scale),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            v: DMatrix::zeros(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.v
    }

    pub fn trace(&self) -> f64 {
        self.v.trace().re
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }
}

/// `log2(1 + x)` computed through `ln_1p` for accuracy at small arguments.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Energy (joules per unit frame) user `k` harvests during a downlink slot
/// of length `tau0` when the station transmits with covariance `cov`:
/// `harvest_eff_k * tau0 * h_k^H cov h_k`.
///
/// `cov` here is the transmit-side beam covariance (power scale), not the
/// time-substituted variable used by the relaxed solver.
pub fn harvested_energy(
    params: &SystemParams,
    channels: &ChannelSet,
    tau0: f64,
    cov: &EnergyCovariance,
    user_index: usize,
) -> Result<f64, Error> {
    if user_index >= params.n_users {
        return Err(Error::InvalidArgument(format!(
            "user index {user_index} out of range (K = {})",
            params.n_users
        )));
    }
    if !(0.0..=1.0).contains(&tau0) {
        return Err(Error::InvalidArgument(format!(
            "tau0 must lie in [0, 1], got {tau0}"
        )));
    }
    let gain = linalg::quad_form(cov.matrix(), &channels.dl[user_index]).max(0.0);
    Ok(params.harvest_eff[user_index] * tau0 * gain)
}

/// Throughput of user `k` under the time-substituted covariance `cov`:
/// `tau_k * log2(1 + gamma_k * h_k^H cov h_k / tau_k)`, with the `tau_k = 0`
/// value defined as 0 by continuity.
pub fn user_rate(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    cov: &EnergyCovariance,
    user_index: usize,
) -> f64 {
    debug_assert!(user_index < params.n_users);
    let tau_k = time.tau[user_index + 1];
    if tau_k <= 0.0 {
        return 0.0;
    }
    let gain = linalg::quad_form(cov.matrix(), &channels.dl[user_index]).max(0.0);
    let snr = channels.gamma[user_index] * gain / tau_k;
    tau_k * log2_1p(snr)
}

/// Sum of [`user_rate`] over all users.
pub fn objective_with_cov(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    cov: &EnergyCovariance,
) -> f64 {
    (0..params.n_users)
        .map(|k| user_rate(params, channels, time, cov, k))
        .sum()
}

/// Sum throughput of a (time, beamformer) design:
/// `sum_k tau_k * log2(1 + gamma_k * tau0 / tau_k * |h_k^H w|^2)`.
pub fn objective(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    beamformer: &DVector<C64>,
) -> f64 {
    let tau0 = time.tau0();
    let mut total = 0.0;
    for k in 0..params.n_users {
        let tau_k = time.tau[k + 1];
        if tau_k <= 0.0 {
            continue;
        }
        let gain = channels.dl[k].dotc(beamformer).norm_sqr();
        let snr = channels.gamma[k] * tau0 * gain / tau_k;
        total += tau_k * log2_1p(snr);
    }
    total
}

/// Throughput of user `k` under deterministic power signalling with the
/// combined (time-substituted) beam `vbar`:
/// `tau_k * log2(1 + gamma_k / tau_k * |h_k^H vbar|^2)`.
pub fn deterministic_user_rate(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    vbar: &DVector<C64>,
    user_index: usize,
) -> f64 {
    debug_assert!(user_index < params.n_users);
    let tau_k = time.tau[user_index + 1];
    if tau_k <= 0.0 {
        return 0.0;
    }
    let gain = channels.dl[user_index].dotc(vbar).norm_sqr();
    tau_k * log2_1p(channels.gamma[user_index] * gain / tau_k)
}

/// Sum of [`deterministic_user_rate`] over all users.
pub fn deterministic_objective(
    params: &SystemParams,
    channels: &ChannelSet,
    time: &TimeAllocation,
    vbar: &DVector<C64>,
) -> f64 {
    (0..params.n_users)
        .map(|k| deterministic_user_rate(params, channels, time, vbar, k))
        .sum()
}

/// Sum throughput of a full [`Solution`], validating feasibility first.
pub fn sum_rate(
    params: &SystemParams,
    channels: &ChannelSet,
    solution: &Solution,
) -> Result<f64, Error> {
    let violations = validate(params, channels, solution);
    if !violations.is_empty() {
        let msg = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Infeasible(msg));
    }
    Ok(objective(
        params,
        channels,
        &solution.time,
        &solution.beamformer,
    ))
}

/// One violated feasibility constraint, with the offending slack.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    NegativeTime {
        slot: usize,
        value: f64,
    },
    TimeBudget {
        slack: f64,
    },
    PowerBudget {
        slack: f64,
    },
    NegativeRate {
        user: usize,
        value: f64,
    },
    SumRateMismatch {
        stated: f64,
        computed: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension {
                what,
                got,
                expected,
            } => {
                write!(f, "{what} has size {got}, expected {expected}")
            }
            Violation::NegativeTime { slot, value } => {
                write!(f, "time fraction {slot} is negative ({value:.3e})")
            }
            Violation::TimeBudget { slack } => {
                write!(f, "time budget exceeded by {slack:.3e}")
            }
            Violation::PowerBudget { slack } => {
                write!(f, "power budget exceeded by {slack:.3e} W")
            }
            Violation::NegativeRate { user, value } => {
                write!(f, "rate of user {user} is negative ({value:.3e})")
            }
            Violation::SumRateMismatch { stated, computed } => {
                write!(
                    f,
                    "stated sum rate {stated:.12e} disagrees with per-user sum {computed:.12e}"
                )
            }
        }
    }
}

/// Check every solution invariant; an empty list means feasible.
pub fn validate(
    params: &SystemParams,
    _channels: &ChannelSet,
    solution: &Solution,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if solution.time.tau.len() != params.n_users + 1 {
        out.push(Violation::Dimension {
            what: "time allocation",
            got: solution.time.tau.len(),
            expected: params.n_users + 1,
        });
        return out;
    }
    if solution.beamformer.len() != params.n_antennas {
        out.push(Violation::Dimension {
            what: "beamformer",
            got: solution.beamformer.len(),
            expected: params.n_antennas,
        });
        return out;
    }
    if solution.rates.len() != params.n_users {
        out.push(Violation::Dimension {
            what: "rate vector",
            got: solution.rates.len(),
            expected: params.n_users,
        });
        return out;
    }
    for (slot, t) in solution.time.tau.iter().enumerate() {
        if *t < 0.0 {
            out.push(Violation::NegativeTime { slot, value: *t });
        }
    }
    let total: f64 = solution.time.tau.iter().sum();
    if total > 1.0 + TIME_BUDGET_SLACK {
        out.push(Violation::TimeBudget { slack: total - 1.0 });
    }
    let power = solution.beamformer.norm_squared();
    if power > params.p_max * (1.0 + POWER_BUDGET_REL) {
        out.push(Violation::PowerBudget {
            slack: power - params.p_max,
        });
    }
    for (user, r) in solution.rates.iter().enumerate() {
        if *r < 0.0 {
            out.push(Violation::NegativeRate { user, value: *r });
        }
    }
    let computed: f64 = solution.rates.iter().sum();
    let tol = RATE_SUM_REL * computed.abs().max(1.0);
    if (solution.sum_rate - computed).abs() > tol {
        out.push(Violation::SumRateMismatch {
            stated: solution.sum_rate,
            computed,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_instance(gamma_target: f64) -> (SystemParams, ChannelSet) {
        // noise chosen so gamma = 0.5 * |g|^2 / (1 * noise) hits the target
        let noise = 0.5 / gamma_target;
        let params = SystemParams::uniform(1, 1, 1.0, noise, 0.5, 1.0).unwrap();
        let channels = ChannelSet::new(
            &params,
            vec![DVector::from_vec(vec![c(1.0, 0.0)])],
            vec![c(1.0, 0.0)],
        )
        .unwrap();
        (params, channels)
    }

    #[test]
    fn gamma_direct_substitution() {
        let params = SystemParams::uniform(2, 1, 1.0, 1.0, 0.5, 1.0).unwrap();
        // xi=0.5, |g|^2=2, gap=1, noise=1 -> gamma = 1
        let g = c(2.0f64.sqrt(), 0.0);
        assert!((compute_gamma(&params, g, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_at_realistic_radio_constants() {
        // xi=0.5, |g|^2=1e-3, gap=10^0.98, noise=1e-10 -> ~5.236e5
        let gap = 10f64.powf(0.98);
        let params = SystemParams::uniform(4, 1, 1.0, 1e-10, 0.5, gap).unwrap();
        let g = c(1e-3f64.sqrt(), 0.0);
        let got = compute_gamma(&params, g, 0).unwrap();
        let expect = 0.5 * 1e-3 / (gap * 1e-10);
        assert!((got - expect).abs() <= 1e-12 * expect);
        assert!((got - 5.236e5).abs() < 1e3, "got {got}");
    }

    #[test]
    fn gamma_zero_gain_and_bad_index() {
        let params = SystemParams::uniform(2, 1, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(compute_gamma(&params, c(0.0, 0.0), 0).unwrap(), 0.0);
        assert!(matches!(
            compute_gamma(&params, c(1.0, 0.0), 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn params_invariants_enforced() {
        assert!(SystemParams::uniform(0, 1, 1.0, 1.0, 0.5, 1.0).is_err());
        assert!(SystemParams::uniform(1, 1, 0.0, 1.0, 0.5, 1.0).is_err());
        assert!(SystemParams::uniform(1, 1, 1.0, 0.0, 0.5, 1.0).is_err());
        assert!(SystemParams::uniform(1, 1, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::uniform(1, 1, 1.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn harvested_energy_direct_substitution() {
        // xi=0.5, tau0=0.5, h=[1,0], w=[2,0]: E = 0.5 * 0.5 * |h^H w|^2 = 1
        let params = SystemParams::uniform(2, 1, 8.0, 1.0, 0.5, 1.0).unwrap();
        let channels = ChannelSet::new(
            &params,
            vec![DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])],
            vec![c(1.0, 0.0)],
        )
        .unwrap();
        let w = DVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        let cov = EnergyCovariance::rank_one(w.norm_squared(), &(w.clone() / c(w.norm(), 0.0)));
        let e = harvested_energy(&params, &channels, 0.5, &cov, 0).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        // tau0 = 0 harvests nothing
        assert_eq!(
            harvested_energy(&params, &channels, 0.0, &cov, 0).unwrap(),
            0.0
        );
        // orthogonal beam harvests nothing
        let w_perp = DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let cov_perp = EnergyCovariance::rank_one(4.0, &w_perp);
        let e_perp = harvested_energy(&params, &channels, 0.5, &cov_perp, 0).unwrap();
        assert!(e_perp.abs() < 1e-15);
        // out-of-range tau0 is an argument error
        assert!(harvested_energy(&params, &channels, 1.5, &cov, 0).is_err());
    }

    #[test]
    fn user_rate_examples() {
        let (params, channels) = scalar_instance(1.0);
        // tau_k = 0.5, gamma * gain = 0.5 -> 0.5 * log2(2) = 0.5
        let time = TimeAllocation::new(vec![0.5, 0.5]).unwrap();
        let cov = EnergyCovariance::rank_one(0.5, &DVector::from_vec(vec![c(1.0, 0.0)]));
        let r = user_rate(&params, &channels, &time, &cov, 0);
        assert!((r - 0.5).abs() < 1e-12);
        // tau_k = 0 is the continuity convention
        let time0 = TimeAllocation::new(vec![0.5, 0.0]).unwrap();
        assert_eq!(user_rate(&params, &channels, &time0, &cov, 0), 0.0);
        // gamma = 0 kills the rate regardless of tau
        let (params_z, channels_z) = {
            let params = SystemParams::uniform(1, 1, 1.0, 1.0, 0.5, 1.0).unwrap();
            let channels = ChannelSet::new(
                &params,
                vec![DVector::from_vec(vec![c(1.0, 0.0)])],
                vec![c(0.0, 0.0)],
            )
            .unwrap();
            (params, channels)
        };
        assert_eq!(user_rate(&params_z, &channels_z, &time, &cov, 0), 0.0);
    }

    #[test]
    fn objective_scalar_case() {
        // K=1, tau0 = tau1 = 0.5, gamma |h^H w|^2 = 2 -> 0.5 log2(3)
        let (params, channels) = scalar_instance(2.0);
        let time = TimeAllocation::new(vec![0.5, 0.5]).unwrap();
        let w = DVector::from_vec(vec![c(1.0, 0.0)]);
        let got = objective(&params, &channels, &time, &w);
        assert!((got - 0.5 * 3.0f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn objective_zero_channels() {
        let params = SystemParams::uniform(2, 2, 1.0, 1.0, 0.5, 1.0).unwrap();
        let channels = ChannelSet::new(
            &params,
            vec![DVector::zeros(2), DVector::zeros(2)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let time = TimeAllocation::new(vec![0.4, 0.3, 0.3]).unwrap();
        let w = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(objective(&params, &channels, &time, &w), 0.0);
    }

    #[test]
    fn rank_one_trace_matches_inner_product() {
        // Tr(h h^H v v^H) = |h^H v|^2 for rank-one covariances
        let h = DVector::from_vec(vec![c(0.3, -0.4), c(1.0, 0.25)]);
        let v = DVector::from_vec(vec![c(-0.7, 0.1), c(0.2, 0.9)]);
        let cov = EnergyCovariance::new(linalg::outer(&v)).unwrap();
        let trace_route = linalg::quad_form(cov.matrix(), &h);
        let inner_route = h.dotc(&v).norm_sqr();
        assert!((trace_route - inner_route).abs() <= 1e-12 * inner_route.max(1.0));
    }

    #[test]
    fn covariance_rejects_non_hermitian_and_indefinite() {
        let bad =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(EnergyCovariance::new(bad).is_err());
        let indef =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!(EnergyCovariance::new(indef).is_err());
    }

    #[test]
    fn validate_flags_violations() {
        let (params, channels) = scalar_instance(1.0);
        let good = Solution {
            time: TimeAllocation::new(vec![0.5, 0.5]).unwrap(),
            beamformer: DVector::from_vec(vec![c(1.0, 0.0)]),
            rates: vec![0.5],
            sum_rate: 0.5,
            degenerate: false,
        };
        assert!(validate(&params, &channels, &good).is_empty());

        let mut over_time = good.clone();
        over_time.time.tau = vec![0.6, 0.6];
        let v = validate(&params, &channels, &over_time);
        assert!(v.iter().any(|x| matches!(
            x,
            Violation::TimeBudget { slack } if (slack - 0.2).abs() < 1e-12
        )));

        let mut over_power = good.clone();
        over_power.beamformer = DVector::from_vec(vec![c(2.0f64.sqrt(), 0.0)]);
        let v = validate(&params, &channels, &over_power);
        assert!(v.iter().any(|x| matches!(x, Violation::PowerBudget { .. })));

        assert!(sum_rate(&params, &channels, &over_power).is_err());
    }

    #[test]
    fn rate_continuity_near_zero_slot() {
        // tau log2(1 + c/tau) -> 0 as tau -> 0+
        let (params, channels) = scalar_instance(1.0);
        let cov = EnergyCovariance::rank_one(1.0, &DVector::from_vec(vec![c(1.0, 0.0)]));
        let mut prev = f64::INFINITY;
        for exp in 1..=12 {
            let tau = 10f64.powi(-exp);
            let time = TimeAllocation::new(vec![0.5, tau]).unwrap();
            let r = user_rate(&params, &channels, &time, &cov, 0);
            assert!(r >= 0.0 && r < prev);
            prev = r;
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn phase_rotation_leaves_rates_unchanged() {
        let params = SystemParams::uniform(3, 2, 2.0, 1.0, 0.5, 1.0).unwrap();
        let dl = vec![
            DVector::from_vec(vec![c(0.4, 0.1), c(-0.3, 0.8), c(0.2, -0.5)]),
            DVector::from_vec(vec![c(-0.1, 0.9), c(0.6, 0.0), c(0.3, 0.3)]),
        ];
        let ul = vec![c(0.7, -0.2), c(0.1, 0.4)];
        let channels = ChannelSet::new(&params, dl.clone(), ul.clone()).unwrap();
        let theta = 1.234f64;
        let rot = C64::from_polar(1.0, theta);
        let dl_rot: Vec<_> = dl.iter().map(|h| h.map(|z| z * rot)).collect();
        let channels_rot = ChannelSet::new(&params, dl_rot, ul).unwrap();
        let time = TimeAllocation::new(vec![0.3, 0.4, 0.3]).unwrap();
        let w = DVector::from_vec(vec![c(0.5, 0.5), c(-0.2, 0.3), c(0.1, -0.9)]);
        let a = objective(&params, &channels, &time, &w);
        let b = objective(&params, &channels_rot, &time, &w);
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}
