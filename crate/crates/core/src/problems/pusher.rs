//! Quasi-static planar pushing with a single sticking point contact.
//!
//! The slider's body twist under a contact wrench follows the ellipsoidal limit surface
//! `V ∝ diag(1, 1, 1/c²)·w`. Sticking ties the slider's velocity at the contact point to
//! the pusher's velocity, which fixes the wrench up to the (linear) contact map.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::ProblemError;
use crate::geometry::BoxSet;
use crate::ocp::{DynamicsModel, QuadraticCost, ShootingProblem};

/// Square slider pushed on its `−x` face. State `[x, y, θ, p]` with `p` the contact
/// offset along the face; input `[v_n, v_t]`, the pusher velocity in the slider frame
/// (normal into the face, tangential along it).
///
/// Contact is sticking, so `p` stays fixed. A pusher moving away from the face
/// (`v_n ≤ 0`) separates and the slider does not move.
#[derive(Debug, Clone, Copy)]
pub struct PusherSlider {
    /// Half the side length; the pushed face sits at `x = −half_width`.
    pub half_width: f64,
    /// Limit-surface ratio `c = f_max / m_max`.
    pub c: f64,
    pub dt: f64,
}

impl PusherSlider {
    pub fn new(half_width: f64, dt: f64) -> Self {
        // A uniform square's limit surface is well approximated with `c ≈ 0.6·side`.
        Self {
            half_width,
            c: 0.6 * 2.0 * half_width,
            dt,
        }
    }

    fn contact_matrix(&self, p: f64) -> Matrix2<f64> {
        let (a, c2) = (self.half_width, self.c * self.c);
        Matrix2::new(1.0 + p * p / c2, a * p / c2, a * p / c2, 1.0 + a * a / c2)
    }

    /// Body twist `(v_x, v_y, ω)` for offset `p` and pusher velocity `u`, or `None` when the
    /// pusher separates.
    pub fn body_twist(&self, p: f64, u: &Vector2<f64>) -> Option<(Vector2<f64>, f64)> {
        if u[0] <= 0.0 {
            return None;
        }
        let f = self.contact_matrix(p).try_inverse()? * u;
        let omega = (-self.half_width * f[1] - p * f[0]) / (self.c * self.c);
        Some((f, omega))
    }
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

impl DynamicsModel for PusherSlider {
    fn state_dim(&self) -> usize {
        4
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut next = x.clone();
        if let Some((v, omega)) = self.body_twist(x[3], &Vector2::new(u[0], u[1])) {
            let world = rotation(x[2]) * v;
            next[0] += self.dt * world[0];
            next[1] += self.dt * world[1];
            next[2] += self.dt * omega;
        }
        next
    }

    fn linearize(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut a = DMatrix::identity(4, 4);
        let mut b = DMatrix::zeros(4, 2);
        let uv = Vector2::new(u[0], u[1]);
        let p = x[3];
        let Some((f, _)) = self.body_twist(p, &uv) else {
            return (a, b);
        };
        let (h, half, c2) = (self.dt, self.half_width, self.c * self.c);
        let rot = rotation(x[2]);
        let (s, c) = x[2].sin_cos();
        let drot = Matrix2::new(-s, -c, c, -s);
        let jinv = self.contact_matrix(p).try_inverse().unwrap_or_else(Matrix2::zeros);

        // ∂/∂θ
        let dtheta = drot * f;
        a[(0, 2)] = h * dtheta[0];
        a[(1, 2)] = h * dtheta[1];

        // ∂/∂p through the contact matrix: ∂f/∂p = −J⁻¹ (∂J/∂p) f.
        let dj = Matrix2::new(2.0 * p / c2, half / c2, half / c2, 0.0);
        let df = -jinv * dj * f;
        let dpos = rot * df;
        a[(0, 3)] = h * dpos[0];
        a[(1, 3)] = h * dpos[1];
        a[(2, 3)] = h * (-half * df[1] - f[0] - p * df[0]) / c2;

        // ∂/∂u: f = J⁻¹u.
        let dpos_u = rot * jinv;
        for k in 0..2 {
            b[(0, k)] = h * dpos_u[(0, k)];
            b[(1, k)] = h * dpos_u[(1, k)];
            b[(2, k)] = h * (-half * jinv[(1, k)] - p * jinv[(0, k)]) / c2;
        }
        (a, b)
    }
}

/// A pushing task: drive the slider pose `[x, y, θ]` to `goal` at the final step.
#[derive(Debug, Clone)]
pub struct PushScene {
    pub slider: PusherSlider,
    pub start: [f64; 4],
    pub goal: [f64; 3],
    pub horizon: usize,
    /// Final-pose weights on `[x, y, θ]`.
    pub goal_weight: [f64; 3],
    pub control_weight: f64,
    /// Per-step pusher speed limit; when set the controls are restricted to
    /// `v_n ∈ [0, limit]`, `v_t ∈ [−limit, limit]`.
    pub velocity_limit: Option<f64>,
}

impl PushScene {
    /// Nominal initial guess: a gentle straight push.
    pub fn nominal_controls(&self) -> DVector<f64> {
        let speed = self.velocity_limit.unwrap_or(0.1).min(0.1) * 0.5;
        let mut u = DVector::zeros(2 * self.horizon);
        for t in 0..self.horizon {
            u[2 * t] = speed;
        }
        u
    }
}

pub fn push_problem(scene: &PushScene) -> Result<ShootingProblem, ProblemError> {
    if !(scene.slider.half_width > 0.0 && scene.slider.c > 0.0 && scene.slider.dt > 0.0) {
        return Err(ProblemError::InvalidSpec("slider parameters must be positive".into()));
    }
    if scene.start[3].abs() > scene.slider.half_width {
        return Err(ProblemError::InvalidSpec(format!(
            "contact offset {} is off the face",
            scene.start[3]
        )));
    }
    let g = scene.goal;
    let target = DVector::from_vec(vec![g[0], g[1], g[2], scene.start[3]]);
    let w = scene.goal_weight;
    let cost = QuadraticCost::diagonal(
        target,
        &[0.0; 4],
        &[w[0], w[1], w[2], 0.0],
        &[scene.control_weight; 2],
    );
    let mut prob = ShootingProblem::new(
        Arc::new(scene.slider),
        Arc::new(cost),
        DVector::from_column_slice(&scene.start),
        scene.horizon,
    )?;
    if let Some(limit) = scene.velocity_limit {
        let set = BoxSet::new(
            DVector::from_vec(vec![0.0, -limit]),
            DVector::from_vec(vec![limit, limit]),
        )?;
        prob = prob.with_control_set_per_step(Arc::new(set))?;
    }
    Ok(prob)
}
