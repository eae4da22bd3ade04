//! Numerical certificates for superintegrable chained Hamiltonians.
//!
//! A chain `Lₙ, …, L₁ = H` is described by [`chain::ChainSystem`]. The extra
//! constants of each level live in [`hyp`], brackets and ranks in
//! [`bracket`], trajectories in [`integrator`], and curvature in
//! [`geometry`]. [`suite`] ties everything to a configuration file.

pub mod bracket;
pub mod chain;
pub mod config;
pub mod degree;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod hyp;
pub mod integrator;
pub mod report;
pub mod sampling;
pub mod suite;

pub use chain::{build_system, eval_chain, flow_field, inverse_metric, ChainSystem, ChainValues, FamilyTag, PhasePoint, RationalParam};
pub use config::{parse_config, RunConfig, SuiteName};
pub use error::{Error, Result};
pub use report::emit_outputs;
pub use suite::{run_suite, SuiteReport};
