//! Device-independent randomness certification.
//!
//! Computes upper bounds on the guessing probability of Bell-test outputs
//! through NPA relaxations of the quantum set (or the no-signaling polytope),
//! and extracts from the dual the Bell expression that certifies the bound.

pub mod bell;
pub mod certificates;
pub mod digp;
pub mod error;
pub mod npa;
pub mod ns;
pub mod quantum;
pub mod solver;

pub use error::{Error, Result};
