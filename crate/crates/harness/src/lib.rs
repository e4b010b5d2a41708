//! Benchmark harness: scenario files in, run records, traces and summary tables out.
//!
//! A scenario names a problem from the registry, a solver and a seed; see
//! [`scenario`] for the file format. Scene randomness comes only from the seed, so a
//! scenario reproduces the same records on every run (wall time aside).

pub mod plot;
pub mod registry;
pub mod rng;
pub mod run;
pub mod scenario;
pub mod suite;

use thiserror::Error;

pub use plot::{emit_plotdata, PlotKind};
pub use run::{records_csv, run_once, run_scenario, RunOutput, RunRecord};
pub use scenario::{parse_geometry_csv, write_geometry_csv, ProblemSpec, Scenario, SolverKind};
pub use suite::{collect_scenarios, run_suite, summary_csv, summary_table, SuiteResult, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("{0}")]
    MissingHistory(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) | HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}
