//! Spectral projected gradient descent over a single projectable domain.

mod line_search;
mod objective;
mod solver;

use thiserror::Error;

pub use line_search::{
    nonmonotone_line_search, LineSearchConfig, LineSearchError, LineSearchOutcome,
    ObjectiveHistory,
};
pub use objective::{EvalCounters, FnObjective, Objective, ObjectiveOracle};
pub use solver::{
    spectral_stepsize, spg_minimize, spg_minimize_warm, SpgConfig, SpgIterate, SpgResult,
    SpgStatus,
};

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpgError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[cfg(test)]
mod tests;
