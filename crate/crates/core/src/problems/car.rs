use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::geometry::{c_obstacle, BoxSet, ConvexPolygon2D, Footprint, Point2};
use crate::ocp::{Bicycle, DoubleIntegrator, DynamicsModel, QuadraticCost, ShootingProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CarModel {
    /// Double integrator in the plane, state `[x, y, v_x, v_y]`.
    Point,
    /// Kinematic bicycle, state `[x, y, θ, v]`, input `[δ, a]`.
    Bicycle { wheelbase: f64 },
}

impl CarModel {
    fn dynamics(&self, dt: f64) -> Arc<dyn DynamicsModel> {
        match *self {
            CarModel::Point => Arc::new(DoubleIntegrator { dim: 2, dt }),
            CarModel::Bicycle { wheelbase } => Arc::new(Bicycle { wheelbase, dt }),
        }
    }
}

/// Drive from `start` to `goal` without the footprint touching any obstacle. Both
/// models keep the position in the first two state coordinates.
#[derive(Debug, Clone)]
pub struct CarScene {
    pub model: CarModel,
    pub dt: f64,
    pub horizon: usize,
    pub start: DVector<f64>,
    pub goal: DVector<f64>,
    pub robot: Footprint,
    pub obstacles: Vec<ConvexPolygon2D>,
    /// Final-state weights, one per state coordinate.
    pub goal_weight: Vec<f64>,
    pub control_weight: f64,
    /// Symmetric per-step bounds on each control coordinate.
    pub control_limits: Option<Vec<f64>>,
}

impl CarScene {
    /// Initial guess: zero inputs, with a small forward acceleration for the bicycle so
    /// the steering gradient does not vanish.
    pub fn nominal_controls(&self) -> DVector<f64> {
        let mut u = DVector::zeros(2 * self.horizon);
        if matches!(self.model, CarModel::Bicycle { .. }) {
            for t in 0..self.horizon {
                u[2 * t + 1] = 0.1;
            }
        }
        u
    }
}

pub fn car_obstacle_problem(scene: &CarScene) -> Result<ShootingProblem, ProblemError> {
    let dynamics = scene.model.dynamics(scene.dt);
    let m = dynamics.state_dim();
    if scene.goal.len() != m || scene.goal_weight.len() != m {
        return Err(ProblemError::InvalidSpec(format!(
            "goal and goal weights need {m} entries"
        )));
    }
    let start_pos = Point2::new(scene.start[0], scene.start[1]);
    let c_obstacles = scene
        .obstacles
        .iter()
        .map(|o| c_obstacle(&scene.robot, o))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(i) = c_obstacles.iter().position(|c| c.collides(&start_pos)) {
        return Err(ProblemError::StartInCollision(i));
    }

    let cost = QuadraticCost::diagonal(
        scene.goal.clone(),
        &vec![0.0; m],
        &scene.goal_weight,
        &[scene.control_weight; 2],
    );
    let mut prob = ShootingProblem::new(dynamics, Arc::new(cost), scene.start.clone(), scene.horizon)?;
    if let Some(limits) = &scene.control_limits {
        let hi = DVector::from_column_slice(limits);
        prob = prob.with_control_set_per_step(Arc::new(BoxSet::new(-&hi, hi)?))?;
    }
    let steps: Vec<usize> = (1..=scene.horizon).collect();
    for (i, c) in c_obstacles.into_iter().enumerate() {
        prob.add_state_set(format!("obstacle_{i}"), vec![0, 1], steps.clone(), Arc::new(c))?;
    }
    Ok(prob)
}
