use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Stage-separable trajectory cost
/// `c(x, u) = Σ_{t=1..T} s_t(x_t) + Σ_{t=0..T−1} r_t(u_t)`.
///
/// Hessians are used only by the iLQR baseline; a Gauss-Newton approximation is fine.
pub trait StageCost: fmt::Debug + Send + Sync {
    /// State term at time `t ∈ 1..=horizon`.
    fn state_cost(&self, t: usize, horizon: usize, x: &DVector<f64>) -> f64;

    fn state_grad(&self, t: usize, horizon: usize, x: &DVector<f64>) -> DVector<f64>;

    fn state_hess(&self, t: usize, horizon: usize, x: &DVector<f64>) -> DMatrix<f64>;

    /// Control term at time `t ∈ 0..horizon`.
    fn control_cost(&self, t: usize, u: &DVector<f64>) -> f64;

    fn control_grad(&self, t: usize, u: &DVector<f64>) -> DVector<f64>;

    fn control_hess(&self, t: usize, u: &DVector<f64>) -> DMatrix<f64>;
}

/// Quadratic tracking cost: `½(x−x*)ᵀQ(x−x*)` on intermediate states,
/// `½(x−x*)ᵀQ_f(x−x*)` on the final state and `½uᵀRu` on every control.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    pub target: DVector<f64>,
    pub q: DMatrix<f64>,
    pub q_final: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl QuadraticCost {
    pub fn new(target: DVector<f64>, q: DMatrix<f64>, q_final: DMatrix<f64>, r: DMatrix<f64>) -> Self {
        let m = target.len();
        assert!(q.shape() == (m, m) && q_final.shape() == (m, m), "state weights must be m×m");
        assert!(r.is_square(), "control weight must be square");
        Self {
            target,
            q,
            q_final,
            r,
        }
    }

    /// Diagonal weights: `q` on running states, `q_final` on the final state, `r` on
    /// controls.
    pub fn diagonal(target: DVector<f64>, q: &[f64], q_final: &[f64], r: &[f64]) -> Self {
        let diag = |w: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(w));
        Self::new(target, diag(q), diag(q_final), diag(r))
    }

    fn weight(&self, t: usize, horizon: usize) -> &DMatrix<f64> {
        if t == horizon {
            &self.q_final
        } else {
            &self.q
        }
    }
}

impl StageCost for QuadraticCost {
    fn state_cost(&self, t: usize, horizon: usize, x: &DVector<f64>) -> f64 {
        let e = x - &self.target;
        0.5 * e.dot(&(self.weight(t, horizon) * &e))
    }

    fn state_grad(&self, t: usize, horizon: usize, x: &DVector<f64>) -> DVector<f64> {
        self.weight(t, horizon) * (x - &self.target)
    }

    fn state_hess(&self, t: usize, horizon: usize, _x: &DVector<f64>) -> DMatrix<f64> {
        self.weight(t, horizon).clone()
    }

    fn control_cost(&self, _t: usize, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.r * u))
    }

    fn control_grad(&self, _t: usize, u: &DVector<f64>) -> DVector<f64> {
        &self.r * u
    }

    fn control_hess(&self, _t: usize, _u: &DVector<f64>) -> DMatrix<f64> {
        self.r.clone()
    }
}

/// The zero cost.
#[derive(Debug, Clone, Copy)]
pub struct ZeroCost {
    pub state_dim: usize,
    pub control_dim: usize,
}

impl StageCost for ZeroCost {
    fn state_cost(&self, _t: usize, _horizon: usize, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn state_grad(&self, _t: usize, _horizon: usize, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.state_dim)
    }

    fn state_hess(&self, _t: usize, _horizon: usize, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.state_dim, self.state_dim)
    }

    fn control_cost(&self, _t: usize, _u: &DVector<f64>) -> f64 {
        0.0
    }

    fn control_grad(&self, _t: usize, _u: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.control_dim)
    }

    fn control_hess(&self, _t: usize, _u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.control_dim, self.control_dim)
    }
}
