//! Conic programs (PSD blocks, a nonnegative orthant, linear equalities), an
//! interior-point solver reporting dual multipliers, and SDPA sparse I/O.

mod ipm;
mod program;
mod sdpa;
mod settings;

pub use ipm::{solve, BlockValue, SolverReport, SolverStatus};
pub use program::{BlockKind, ConicProgram, Constraint, Entry, ProgramBuilder, Sense, SparseSym};
pub use sdpa::{export_sdpa, import_sdpa};
pub use settings::{SolverSettings, SETTINGS_ENV};
