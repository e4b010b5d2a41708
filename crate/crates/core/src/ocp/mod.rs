//! Direct shooting: controls are the only decision variables and states are recovered
//! by forward rollout. Gradients and constraint Jacobian products are pulled back
//! through the dynamics with a single backward sweep.

mod cost;
mod dynamics;
mod ilqr;
mod shooting;

use thiserror::Error;

pub use cost::{QuadraticCost, StageCost, ZeroCost};
pub use dynamics::{
    Bicycle, DoubleIntegrator, DynamicsModel, LinearDynamics, Pendulum, SingleIntegrator,
    TimeVaryingLinear,
};
pub use ilqr::{ilqr_baseline, IlqrConfig};
pub use shooting::{
    adjoint_vjp, cost_gradients, reduced_objective, rollout, shooting_blocks, solve_ocp,
    trajectory_cost, write_trajectory_csv, RolloutCache, ShootingConstraintMap,
    ShootingObjective, ShootingProblem, StateSelection, StateTrajectory, TrajectoryConstraint,
    TrajectoryMap,
};

use crate::alspg::AlspgError;
use crate::geometry::GeometryError;
use crate::spg::SpgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcpError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rollout produced a non-finite state at t = {t}")]
    NonFiniteState { t: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spg(#[from] SpgError),
    #[error(transparent)]
    Alspg(#[from] AlspgError),
}
