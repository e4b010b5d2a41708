use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::arm::PlanarArm;
use super::ProblemError;
use crate::geometry::Point2;
use crate::ocp::{DoubleIntegrator, ShootingProblem, StageCost};

/// Final end-effector tracking plus a rest condition, with an effort term scaled by the
/// step length so the problem approximates one continuous-time cost at any horizon.
///
/// State `[q, q̇]`; final cost `½w‖f(q) − target‖² + ½w_v‖q̇‖²`, running cost
/// `½r·dt‖u‖²`. The state Hessian is the Gauss-Newton one.
#[derive(Debug, Clone)]
pub struct ReachCost {
    pub arm: PlanarArm,
    pub target: Point2,
    pub task_weight: f64,
    pub velocity_weight: f64,
    pub effort_weight: f64,
    pub dt: f64,
}

impl ReachCost {
    fn split<'a>(&self, x: &'a DVector<f64>) -> (DVector<f64>, nalgebra::DVectorView<'a, f64>) {
        let n = self.arm.dof();
        (x.rows(0, n).into_owned(), x.rows(n, n))
    }
}

impl StageCost for ReachCost {
    fn state_cost(&self, t: usize, horizon: usize, x: &DVector<f64>) -> f64 {
        if t != horizon {
            return 0.0;
        }
        let (q, v) = self.split(x);
        let (p, _) = self.arm.fk(&q);
        0.5 * self.task_weight * (p - self.target).norm_squared() + 0.5 * self.velocity_weight * v.norm_squared()
    }

    fn state_grad(&self, t: usize, horizon: usize, x: &DVector<f64>) -> DVector<f64> {
        let n = self.arm.dof();
        let mut g = DVector::zeros(2 * n);
        if t != horizon {
            return g;
        }
        let (q, v) = self.split(x);
        let (p, j) = self.arm.fk(&q);
        g.rows_mut(0, n).copy_from(&(j.tr_mul(&(p - self.target)) * self.task_weight));
        g.rows_mut(n, n).copy_from(&(v * self.velocity_weight));
        g
    }

    fn state_hess(&self, t: usize, horizon: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.arm.dof();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        if t != horizon {
            return h;
        }
        let (q, _) = self.split(x);
        let (_, j) = self.arm.fk(&q);
        let jtj = j.tr_mul(&j) * self.task_weight;
        h.view_mut((0, 0), (n, n)).copy_from(&jtj);
        for i in 0..n {
            h[(n + i, n + i)] = self.velocity_weight;
        }
        h
    }

    fn control_cost(&self, _t: usize, u: &DVector<f64>) -> f64 {
        0.5 * self.effort_weight * self.dt * u.norm_squared()
    }

    fn control_grad(&self, _t: usize, u: &DVector<f64>) -> DVector<f64> {
        u * (self.effort_weight * self.dt)
    }

    fn control_hess(&self, _t: usize, u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(u.len(), u.len()) * (self.effort_weight * self.dt)
    }
}

/// Move the arm from rest at `q_start` so the end-effector reaches `target` after
/// `duration` seconds, discretized into `horizon` steps of joint-acceleration control.
pub fn reach_problem(
    arm: &PlanarArm,
    q_start: &DVector<f64>,
    target: Point2,
    horizon: usize,
    duration: f64,
) -> Result<ShootingProblem, ProblemError> {
    let n = arm.dof();
    if q_start.len() != n {
        return Err(ProblemError::InvalidSpec(format!("start has {} joints, arm has {n}", q_start.len())));
    }
    if !(duration > 0.0) || horizon == 0 {
        return Err(ProblemError::InvalidSpec("duration and horizon must be positive".into()));
    }
    let dt = duration / horizon as f64;
    let cost = ReachCost {
        arm: arm.clone(),
        target,
        task_weight: 100.0,
        velocity_weight: 1.0,
        effort_weight: 1e-2,
        dt,
    };
    let mut x0 = DVector::zeros(2 * n);
    x0.rows_mut(0, n).copy_from(q_start);
    Ok(ShootingProblem::new(
        Arc::new(DoubleIntegrator { dim: n, dt }),
        Arc::new(cost),
        x0,
        horizon,
    )?)
}
