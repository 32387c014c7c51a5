use thiserror::Error;

/// Errors produced by the model and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The iterative eigensolver hit its iteration cap with the residual
    /// still above the acceptance threshold.
    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    /// A candidate solution violated a feasibility constraint.
    #[error("infeasible solution: {0}")]
    Infeasible(String),

    /// The relaxed solver produced a covariance whose second eigenvalue is
    /// not negligible. Attached trace entries are (objective, rank ratio)
    /// pairs from the ascent run.
    #[error(
        "relaxation not tight numerically: rank ratio {rank_ratio:.3e} after {} ascent steps",
        trace.len()
    )]
    RelaxationNotTight {
        rank_ratio: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("unknown solver `{0}` (available: {1})")]
    UnknownSolver(String, String),
}
