//! Numerical tolerances used across the crate.
//!
//! Everything that bounds a floating-point comparison lives here so that the
//! solver contracts and the test suite agree on one set of numbers.

/// Hermitian symmetry defect allowed in a covariance or Gram matrix,
/// relative to the largest entry magnitude (floored at 1).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Most negative eigenvalue a matrix may have and still count as PSD,
/// as a magnitude relative to the largest eigenvalue (floored at 1).
/// Double-precision eigensolvers leave noise of roughly this size.
pub const PSD_EIG_FLOOR: f64 = 1e-10;

/// Target residual for the power iteration, relative to the eigenvalue:
/// iterate until ||M v - lambda v|| <= POWER_ITER_TOL * lambda.
pub const POWER_ITER_TOL: f64 = 1e-12;

/// Iteration cap for the power iteration.
pub const POWER_ITER_CAP: usize = 10_000;

/// Residual the principal eigenpair must meet even when the iteration cap
/// is reached (near-degenerate leading eigenvalues stall the iteration but
/// the Rayleigh quotient is already accurate). Above this, hard error.
pub const EIG_RESIDUAL_REL: f64 = 1e-9;

/// Default golden-section interval width on the downlink time fraction.
pub const GOLDEN_TOL_DEFAULT: f64 = 1e-10;

/// Open-interval guard for the scalar objective: the search domain is
/// [TAU_DOMAIN_EPS, 1 - TAU_DOMAIN_EPS], endpoint values defined by
/// continuity.
pub const TAU_DOMAIN_EPS: f64 = 1e-15;

/// Slack allowed on the frame-time budget sum(tau) <= 1.
pub const TIME_BUDGET_SLACK: f64 = 1e-12;

/// Relative slack allowed on the transmit power budget ||w||^2 <= P_max.
pub const POWER_BUDGET_REL: f64 = 1e-9;

/// Relative tolerance between a solution's stored sum rate and the sum of
/// its per-user rates.
pub const RATE_SUM_REL: f64 = 1e-12;

/// Absolute objective change below which the reference solver's ascent
/// loop is considered converged.
pub const SCA_INNER_TOL: f64 = 1e-12;

/// Iteration cap for one ascent run of the reference solver.
pub const SCA_ITER_CAP: usize = 1_000;

/// Number of grid points per round in the reference solver's search over
/// the downlink time fraction.
pub const GRID_POINTS_DEFAULT: usize = 101;

/// The grid covers [GRID_EDGE, 1 - GRID_EDGE]; the endpoints themselves
/// carry zero objective.
pub const GRID_EDGE: f64 = 1e-4;

/// The grid is re-bracketed around the incumbent until its width falls
/// below this, which pins the reference solver's tau_0 to ~1e-8.
pub const TAU0_OUTER_TOL: f64 = 1e-8;

/// Safety cap on re-bracketing rounds (each round shrinks the bracket by
/// about (n_grid - 1) / 2, so a handful suffice).
pub const REFINE_ROUNDS_CAP: usize = 16;

/// Largest lambda_2 / lambda_1 the reference solver accepts before
/// declaring the relaxation numerically not tight.
pub const RANK_RATIO_MAX: f64 = 1e-8;

/// Relative agreement required between the fast and reference solvers on
/// the same instance.
pub const SOLVER_AGREEMENT_REL: f64 = 1e-6;

/// Relative agreement required between the Gaussian-signalling and
/// deterministic-signalling objectives.
pub const DETERMINISTIC_EQUIV_REL: f64 = 1e-9;
