//! Weighted path-following interior point solver for linear programs with
//! two-sided box constraints, with maximum flow, minimum cost flow and
//! generalized (lossy) minimum cost flow frontends.
//!
//! The LP form is `min cᵀx` subject to `Aᵀx = b` and `l ≤ x ≤ u`, where `A`
//! is an `m × n` matrix with full column rank (`m` variables, `n` equality
//! constraints).

pub mod barrier;
pub mod centering;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod pathfollow;
pub mod weights;

pub use error::{Error, Result};

/// Constant regime used by the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Literal constants of the analysis. Extremely slow; intended for
    /// invariant validation on tiny instances.
    Paper,
    /// Practical step sizes and tolerances.
    Practical,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Paper => write!(f, "paper"),
            Mode::Practical => write!(f, "practical"),
        }
    }
}
