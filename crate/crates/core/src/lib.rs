//! Simulation and hydrodynamic-limit toolkit for the stochastic ranking
//! process with space-time dependent jump rates.
//!
//! * [`ratelang`] parses and differentiates rate expressions.
//! * [`model`] holds finite-type model instances, their validation, the
//!   certified rate bound and initial type assignments.
//! * [`sim`] is the exact event-driven N-particle simulator.
//! * [`limit`] solves the N → ∞ limit on tensor grids.
//! * [`tagged`] integrates the limiting motion of a tagged particle.
//! * [`harness`] compares the two and produces reports.

pub mod exec;
pub mod harness;
pub mod limit;
pub mod model;
pub mod ratelang;
pub mod rng;
pub mod sim;
pub mod tagged;

pub use exec::Exec;
pub use limit::{solve, CharacteristicField, Gamma, SolveOptions};
pub use model::{ModelFile, ModelSpec, TypeAssignment};
pub use ratelang::RateExpr;
pub use sim::{simulate, SimConfig, SimOutput};
