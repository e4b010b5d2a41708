//! Benchmark problem families: planar-arm inverse kinematics (deterministic and
//! chance-constrained), a whole-body reaching analog, pusher-slider planning, car
//! obstacle avoidance and arm reach planning.

mod ablation;
mod arm;
mod car;
mod pusher;
mod reach;
mod robust;
mod talos;
#[cfg(test)]
mod tests;

use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::alspg::{alspg_solve, AlspgConfig, AlspgError, AlspgResult, ConstraintBlock};
use crate::geometry::{GeometryError, ProjectableSet};
use crate::ocp::OcpError;
use crate::spg::Objective;

pub use ablation::{without_projections, without_projections_ocp, ViolationMap};
pub use arm::{arm_fk, ik_problem, jacobian_to_dmatrix, CenterOfMassMap, EndEffectorMap, PlanarArm};
pub use car::{car_obstacle_problem, CarModel, CarScene};
pub use pusher::{push_problem, PushScene, PusherSlider};
pub use reach::{reach_problem, ReachCost};
pub use robust::{normal_quantile, robust_ik_problem, ChanceConstraint};
pub use talos::{talos_analog, TalosScene};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("covariance is not positive semidefinite (smallest eigenvalue {0})")]
    NotPsd(f64),
    #[error("probability level {0} outside (0, 1)")]
    QuantileDomain(f64),
    #[error("start position collides with obstacle {0}")]
    StartInCollision(usize),
    #[error("constraint `{0}` has no plain-constraint encoding")]
    NoViolationEncoding(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ocp(#[from] OcpError),
}

/// `‖x − center‖²`, the objective of every static problem here.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub center: DVector<f64>,
}

impl Objective for SquaredDistance {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm_squared()
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.center) * 2.0
    }
}

/// `min_{x ∈ domain} ‖x − center‖²` subject to `g_i(x) ∈ C_i`.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    pub name: String,
    pub center: DVector<f64>,
    pub domain: Arc<dyn ProjectableSet>,
    pub blocks: Vec<ConstraintBlock>,
    /// Initial iterate, already inside the domain.
    pub start: DVector<f64>,
}

impl ConstrainedProblem {
    pub fn objective(&self) -> SquaredDistance {
        SquaredDistance {
            center: self.center.clone(),
        }
    }

    pub fn solve(&self, cfg: &AlspgConfig) -> Result<AlspgResult, AlspgError> {
        self.solve_from(&self.start, cfg)
    }

    pub fn solve_from(&self, x0: &DVector<f64>, cfg: &AlspgConfig) -> Result<AlspgResult, AlspgError> {
        let mut f = self.objective();
        alspg_solve(&mut f, self.domain.as_ref(), &self.blocks, x0, cfg)
    }

    /// Whether `x` is in the domain and satisfies every block within `tol`.
    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.domain.contains(x)
            && self
                .blocks
                .iter()
                .all(|b| b.set.contains_within(&b.map.value(x), tol))
    }
}
