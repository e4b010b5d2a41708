use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Discrete-time dynamics `x_{t+1} = f_t(x_t, u_t)`.
pub trait DynamicsModel: fmt::Debug + Send + Sync {
    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize;

    /// Integration step in seconds.
    fn dt(&self) -> f64;

    fn step(&self, t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `(A_t, B_t) = (∂f/∂x, ∂f/∂u)` at `(x, u)`.
    fn linearize(&self, t: usize, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);

    /// `(A_tᵀw, B_tᵀw)`. Models with cheap transposed products may override this.
    fn step_vjp(
        &self,
        t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let (a, b) = self.linearize(t, x, u);
        (a.tr_mul(w), b.tr_mul(w))
    }
}

/// `x_{t+1} = A x_t + B u_t` with fixed matrices.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
}

impl LinearDynamics {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, dt: f64) -> Self {
        assert!(a.is_square(), "A must be square");
        assert_eq!(a.nrows(), b.nrows(), "A and B must have the same row count");
        Self { a, b, dt }
    }
}

impl DynamicsModel for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn linearize(&self, _t: usize, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a.clone(), self.b.clone())
    }

    fn step_vjp(
        &self,
        _t: usize,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (self.a.tr_mul(w), self.b.tr_mul(w))
    }
}

/// Linear time-varying system with one `(A_t, B_t)` pair per step.
#[derive(Debug, Clone)]
pub struct TimeVaryingLinear {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub dt: f64,
}

impl TimeVaryingLinear {
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>, dt: f64) -> Self {
        assert!(!a.is_empty() && a.len() == b.len(), "need one (A, B) pair per step");
        Self { a, b, dt }
    }

    pub fn horizon(&self) -> usize {
        self.a.len()
    }
}

impl DynamicsModel for TimeVaryingLinear {
    fn state_dim(&self) -> usize {
        self.a[0].nrows()
    }

    fn control_dim(&self) -> usize {
        self.b[0].ncols()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a[t] * x + &self.b[t] * u
    }

    fn linearize(&self, t: usize, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a[t].clone(), self.b[t].clone())
    }

    fn step_vjp(
        &self,
        t: usize,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (self.a[t].tr_mul(w), self.b[t].tr_mul(w))
    }
}

/// `x_{t+1} = x_t + dt·u_t`.
#[derive(Debug, Clone, Copy)]
pub struct SingleIntegrator {
    pub dim: usize,
    pub dt: f64,
}

impl DynamicsModel for SingleIntegrator {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn control_dim(&self) -> usize {
        self.dim
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        x + u * self.dt
    }

    fn linearize(&self, _t: usize, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::identity(self.dim, self.dim),
            DMatrix::identity(self.dim, self.dim) * self.dt,
        )
    }

    fn step_vjp(
        &self,
        _t: usize,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (w.clone(), w * self.dt)
    }
}

/// Position-velocity integrator with state `[p, v]` (`dim` entries each) and
/// acceleration input: `p' = p + dt·v`, `v' = v + dt·u`.
///
/// With `dim = 2` this is the point car; for a planar arm `p` holds the joint angles.
#[derive(Debug, Clone, Copy)]
pub struct DoubleIntegrator {
    pub dim: usize,
    pub dt: f64,
}

impl DynamicsModel for DoubleIntegrator {
    fn state_dim(&self) -> usize {
        2 * self.dim
    }

    fn control_dim(&self) -> usize {
        self.dim
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut next = x.clone();
        for i in 0..d {
            next[i] += self.dt * x[d + i];
            next[d + i] += self.dt * u[i];
        }
        next
    }

    fn linearize(&self, _t: usize, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut a = DMatrix::identity(2 * d, 2 * d);
        let mut b = DMatrix::zeros(2 * d, d);
        for i in 0..d {
            a[(i, d + i)] = self.dt;
            b[(d + i, i)] = self.dt;
        }
        (a, b)
    }

    fn step_vjp(
        &self,
        _t: usize,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let d = self.dim;
        let mut wx = w.clone();
        for i in 0..d {
            wx[d + i] += self.dt * w[i];
        }
        let wu = w.rows(d, d) * self.dt;
        (wx, wu)
    }
}

/// Kinematic bicycle with state `[x, y, θ, v]` and input `[δ, a]` (steering angle and
/// acceleration), integrated with explicit Euler.
#[derive(Debug, Clone, Copy)]
pub struct Bicycle {
    pub wheelbase: f64,
    pub dt: f64,
}

impl Bicycle {
    pub const DEFAULT_WHEELBASE: f64 = 2.7;

    pub fn new(dt: f64) -> Self {
        Self {
            wheelbase: Self::DEFAULT_WHEELBASE,
            dt,
        }
    }
}

impl DynamicsModel for Bicycle {
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
        let (th, v) = (x[2], x[3]);
        let (delta, acc) = (u[0], u[1]);
        DVector::from_vec(vec![
            x[0] + self.dt * v * th.cos(),
            x[1] + self.dt * v * th.sin(),
            th + self.dt * v / self.wheelbase * delta.tan(),
            v + self.dt * acc,
        ])
    }

    fn linearize(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (th, v) = (x[2], x[3]);
        let delta = u[0];
        let h = self.dt;
        let l = self.wheelbase;
        let mut a = DMatrix::identity(4, 4);
        a[(0, 2)] = -h * v * th.sin();
        a[(0, 3)] = h * th.cos();
        a[(1, 2)] = h * v * th.cos();
        a[(1, 3)] = h * th.sin();
        a[(2, 3)] = h / l * delta.tan();
        let mut b = DMatrix::zeros(4, 2);
        let sec = 1.0 / delta.cos();
        b[(2, 0)] = h * v / l * sec * sec;
        b[(3, 1)] = h;
        (a, b)
    }
}

/// Damped pendulum `θ̈ = −(g/l)·sin θ − c·θ̇ + u` with state `[θ, θ̇]`, explicit Euler.
#[derive(Debug, Clone, Copy)]
pub struct Pendulum {
    pub gravity_over_length: f64,
    pub damping: f64,
    pub dt: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            gravity_over_length: 9.81,
            damping: 0.1,
            dt: 0.05,
        }
    }
}

impl DynamicsModel for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let acc = -self.gravity_over_length * x[0].sin() - self.damping * x[1] + u[0];
        DVector::from_vec(vec![x[0] + self.dt * x[1], x[1] + self.dt * acc])
    }

    fn linearize(&self, _t: usize, x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = self.dt;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0,
                h,
                -h * self.gravity_over_length * x[0].cos(),
                1.0 - h * self.damping,
            ],
        );
        let b = DMatrix::from_row_slice(2, 1, &[0.0, h]);
        (a, b)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Largest relative error between `linearize` and central differences of `step`.
    pub(crate) fn linearization_error(
        model: &dyn DynamicsModel,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> f64 {
        let h = 1e-6;
        let (a, b) = model.linearize(0, x, u);
        let mut worst: f64 = 0.0;
        let mut compare = |analytic: DVector<f64>, fd: DVector<f64>| {
            let scale = analytic.norm().max(fd.norm()).max(1.0);
            worst = worst.max((analytic - fd).norm() / scale);
        };
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (model.step(0, &xp, u) - model.step(0, &xm, u)) / (2.0 * h);
            compare(a.column(j).into_owned(), fd);
        }
        for j in 0..u.len() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let fd = (model.step(0, x, &up) - model.step(0, x, &um)) / (2.0 * h);
            compare(b.column(j).into_owned(), fd);
        }
        worst
    }

    fn random_point(model: &dyn DynamicsModel, rng: &mut ChaCha8Rng) -> (DVector<f64>, DVector<f64>) {
        let x = DVector::from_fn(model.state_dim(), |_, _| rng.random_range(-1.0..1.0));
        let u = DVector::from_fn(model.control_dim(), |_, _| rng.random_range(-0.5..0.5));
        (x, u)
    }

    #[test]
    fn bundled_models_linearize_consistently() {
        let models: Vec<Box<dyn DynamicsModel>> = vec![
            Box::new(SingleIntegrator { dim: 3, dt: 0.1 }),
            Box::new(DoubleIntegrator { dim: 2, dt: 0.1 }),
            Box::new(Bicycle::new(0.1)),
            Box::new(Pendulum::default()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for model in &models {
            for _ in 0..100 {
                let (x, u) = random_point(model.as_ref(), &mut rng);
                let err = linearization_error(model.as_ref(), &x, &u);
                assert!(err <= 1e-5, "{model:?}: {err}");
                let w = DVector::from_fn(model.state_dim(), |_, _| rng.random_range(-1.0..1.0));
                let (a, b) = model.linearize(0, &x, &u);
                let (wa, wb) = model.step_vjp(0, &x, &u, &w);
                assert!((wa - a.tr_mul(&w)).amax() < 1e-14);
                assert!((wb - b.tr_mul(&w)).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn bicycle_drives_straight_with_zero_steering() {
        let car = Bicycle::new(0.1);
        let x = DVector::from_vec(vec![0.0, 0.0, 0.0, 2.0]);
        let next = car.step(0, &x, &DVector::from_vec(vec![0.0, 1.0]));
        assert_eq!(next, DVector::from_vec(vec![0.2, 0.0, 0.0, 2.1]));
    }
}
