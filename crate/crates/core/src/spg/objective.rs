use std::ops::{Add, AddAssign, Sub};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Evaluation tallies reported by every solver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvalCounters {
    /// Objective (merit function) evaluations.
    pub n_f: usize,
    /// Objective gradient evaluations.
    pub n_grad: usize,
    /// Constraint map evaluations.
    pub n_g: usize,
    /// Jacobian-transpose products (constraint maps and trajectory sweeps).
    pub n_jac: usize,
}

impl Add for EvalCounters {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            n_f: self.n_f + rhs.n_f,
            n_grad: self.n_grad + rhs.n_grad,
            n_g: self.n_g + rhs.n_g,
            n_jac: self.n_jac + rhs.n_jac,
        }
    }
}

impl AddAssign for EvalCounters {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for EvalCounters {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self {
            n_f: self.n_f - rhs.n_f,
            n_grad: self.n_grad - rhs.n_grad,
            n_g: self.n_g - rhs.n_g,
            n_jac: self.n_jac - rhs.n_jac,
        }
    }
}

/// A smooth objective with an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&mut self, x: &DVector<f64>) -> f64;

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64>;

    /// Work performed internally beyond the value/gradient calls themselves, such as
    /// constraint evaluations or Jacobian products. Only `n_g` and `n_jac` are read.
    fn work(&self) -> EvalCounters {
        EvalCounters::default()
    }
}

impl<O: Objective + ?Sized> Objective for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (**self).value(x)
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        (**self).gradient(x)
    }

    fn work(&self) -> EvalCounters {
        (**self).work()
    }
}

/// Objective assembled from a value closure and a gradient closure.
pub struct FnObjective<F, G> {
    dim: usize,
    value: F,
    gradient: G,
}

impl<F, G> FnObjective<F, G>
where
    F: FnMut(&DVector<f64>) -> f64,
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient,
        }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: FnMut(&DVector<f64>) -> f64,
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }
}

/// Counting front end for an [`Objective`]; every call bumps exactly one counter.
pub struct ObjectiveOracle<'a, O: Objective + ?Sized> {
    objective: &'a mut O,
    n_f: usize,
    n_grad: usize,
    base_work: EvalCounters,
}

impl<'a, O: Objective + ?Sized> ObjectiveOracle<'a, O> {
    pub fn new(objective: &'a mut O) -> Self {
        let base_work = objective.work();
        Self {
            objective,
            n_f: 0,
            n_grad: 0,
            base_work,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&mut self, x: &DVector<f64>) -> f64 {
        self.n_f += 1;
        self.objective.value(x)
    }

    pub fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        self.n_grad += 1;
        self.objective.gradient(x)
    }

    pub fn counters(&self) -> EvalCounters {
        let work = self.objective.work() - self.base_work;
        EvalCounters {
            n_f: self.n_f,
            n_grad: self.n_grad,
            n_g: work.n_g,
            n_jac: work.n_jac,
        }
    }
}
