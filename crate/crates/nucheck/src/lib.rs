//! Numerical verification toolkit for phase-space nuclearity bounds in the
//! massless scalar free field.
//!
//! The crate builds the single-particle objects of the model on a discretized
//! momentum grid (localization subspaces, the trace-class operator combining
//! energy-damped and smeared components, its J-invariant eigenbasis), scans
//! the correlation functions that control spacelike decay, assembles a
//! truncated bosonic Fock space with energy projections and Weyl operators,
//! and evaluates every bound in the chain, from Kosaki subadditivity of
//! Schatten sums up to the N-point nuclear-norm estimate, next to brute-force
//! oracles at desk scale.
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `nucheck` binary for scenario-driven report generation.

pub mod correlations;
pub mod error;
pub mod fock;
pub mod functionals;
pub mod grid;
pub mod linalg;
pub mod localization;
pub mod nuclearity;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
