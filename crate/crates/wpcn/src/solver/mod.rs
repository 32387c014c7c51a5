//! Solver strategies behind a common trait, registered by name.
//!
//! Every strategy consumes the same `(SystemParams, ChannelSet)` pair and
//! produces a [`Solution`]; which one runs is decided at runtime from the
//! experiment spec (or any other caller) through [`create`].

pub mod fast;
pub mod reference;

pub use fast::FastSolver;
pub use reference::{DeterministicSolver, EquivalenceReport, ReferenceSolver, SolverTrace};

use crate::error::Error;
use crate::model::{ChannelSet, Solution, SystemParams};

/// A sum-throughput maximization strategy.
pub trait Solver: Send + Sync {
    /// Registry name of the strategy.
    fn name(&self) -> &'static str;

    /// Compute the jointly optimal time allocation and energy beamformer.
    fn solve(&self, params: &SystemParams, channels: &ChannelSet) -> Result<Solution, Error>;
}

type Constructor = fn() -> Box<dyn Solver>;

static REGISTRY: &[(&str, Constructor)] = &[
    ("fast", || Box::new(FastSolver::default())),
    ("reference", || Box::new(ReferenceSolver::default())),
    ("deterministic", || Box::new(DeterministicSolver::default())),
];

/// Instantiate a registered solver by name.
pub fn create(name: &str) -> Result<Box<dyn Solver>, Error> {
    for (key, ctor) in REGISTRY {
        if *key == name {
            return Ok(ctor());
        }
    }
    Err(Error::UnknownSolver(
        name.to_string(),
        available().join(", "),
    ))
}

/// Names of all registered solvers, in registration order.
pub fn available() -> Vec<&'static str> {
    REGISTRY.iter().map(|(k, _)| *k).collect()
}
