//! Sum-throughput optimization for a multi-user wireless powered
//! communication network under the harvest-then-transmit protocol.
//!
//! A multi-antenna power station spends the first `tau_0` fraction of each
//! frame beaming RF energy to `K` single-antenna user nodes; each user then
//! transmits its own data to a sink in a TDMA slot `tau_k`, powered solely by
//! what it harvested. The design problem is to pick the time split and the
//! downlink energy beamformer jointly so that the sum of the users' uplink
//! throughputs is maximized.
//!
//! The crate provides:
//!
//! * [`model`] - domain types plus the closed-form energy/power/rate
//!   formulas; every solver and test evaluates candidates through it.
//! * [`solver`] - interchangeable solver strategies behind the
//!   [`solver::Solver`] trait, selected by name at runtime:
//!   `fast` (semi-closed form: principal eigenpair of the effective channel
//!   Gram matrix plus a 1-D golden-section search), `reference` (independent
//!   grid-plus-ascent solver of the relaxed convex program, used as an
//!   oracle), and `deterministic` (deterministic-signalling variant).
//! * [`sim`] - Rician/Rayleigh channel generator and a seeded, reproducible
//!   Monte-Carlo harness.
//! * [`experiment`] - batch experiment runner: JSON spec files in, CSV out.
//!
//! The `wpcn` binary exposes the experiment runner on the command line; see
//! the README for spec-file examples.

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod solver;
pub mod tolerances;

pub use error::Error;
