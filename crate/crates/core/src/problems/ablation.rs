//! Plain-constraint variants of projection-based problems: every block `g(x) ∈ C` is
//! rewritten as the equality `h_C(g(x)) = 0`, where `h_C` is the set's hinge-clamped
//! violation residual. The domain keeps its projection.

use std::sync::Arc;

use nalgebra::DVector;

use super::{ConstrainedProblem, ProblemError};
use crate::alspg::{ConstraintBlock, ConstraintMap};
use crate::geometry::{ProjectableSet, SingletonSet};
use crate::ocp::{ShootingProblem, StateTrajectory, TrajectoryConstraint, TrajectoryMap};

fn violation_dim(set: &dyn ProjectableSet, input: usize, name: &str) -> Result<usize, ProblemError> {
    set.violation(&DVector::zeros(input))
        .map(|h| h.len())
        .ok_or_else(|| ProblemError::NoViolationEncoding(name.to_string()))
}

/// `x ↦ h_C(g(x))`.
pub struct ViolationMap {
    inner: Arc<dyn ConstraintMap>,
    set: Arc<dyn ProjectableSet>,
    dim: usize,
}

impl ViolationMap {
    pub fn new(inner: Arc<dyn ConstraintMap>, set: Arc<dyn ProjectableSet>) -> Result<Self, ProblemError> {
        let dim = violation_dim(set.as_ref(), inner.output_dim(), "map")?;
        Ok(Self { inner, set, dim })
    }
}

impl ConstraintMap for ViolationMap {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.inner.value(x);
        self.set
            .violation(&g)
            .unwrap_or_else(|| DVector::from_element(self.dim, f64::NAN))
    }

    fn vjp(&self, x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let g = self.inner.value(x);
        match self.set.violation_vjp(&g, r) {
            Some(w) => self.inner.vjp(x, &w),
            None => DVector::from_element(self.input_dim(), f64::NAN),
        }
    }
}

/// Replaces every constraint block of `prob` by its plain-constraint equality.
pub fn without_projections(prob: &ConstrainedProblem) -> Result<ConstrainedProblem, ProblemError> {
    let blocks = prob
        .blocks
        .iter()
        .map(|b| {
            let map = ViolationMap::new(b.map.clone(), b.set.clone())
                .map_err(|_| ProblemError::NoViolationEncoding(b.name.clone()))?;
            let dim = map.output_dim();
            Ok(ConstraintBlock::new(
                format!("{}_plain", b.name),
                Arc::new(map),
                Arc::new(SingletonSet::zeros(dim)),
            ))
        })
        .collect::<Result<Vec<_>, ProblemError>>()?;
    Ok(ConstrainedProblem {
        name: format!("{}_noproj", prob.name),
        blocks,
        ..prob.clone()
    })
}

struct TrajectoryViolation {
    inner: Arc<dyn TrajectoryMap>,
    set: Arc<dyn ProjectableSet>,
    dim: usize,
}

impl TrajectoryMap for TrajectoryViolation {
    fn output_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, traj: &StateTrajectory, u: &DVector<f64>) -> DVector<f64> {
        let g = self.inner.value(traj, u);
        self.set
            .violation(&g)
            .unwrap_or_else(|| DVector::from_element(self.dim, f64::NAN))
    }

    fn vjp(
        &self,
        traj: &StateTrajectory,
        u: &DVector<f64>,
        r: &DVector<f64>,
    ) -> (DVector<f64>, Option<DVector<f64>>) {
        let g = self.inner.value(traj, u);
        match self.set.violation_vjp(&g, r) {
            Some(w) => self.inner.vjp(traj, u, &w),
            None => (DVector::from_element(traj.horizon() * traj.state(0).len(), f64::NAN), None),
        }
    }
}

/// Shooting-problem counterpart of [`without_projections`]; the control domain keeps its
/// projection.
pub fn without_projections_ocp(prob: &ShootingProblem) -> Result<ShootingProblem, ProblemError> {
    let constraints = prob
        .constraints
        .iter()
        .map(|c| {
            let dim = violation_dim(c.set.as_ref(), c.map.output_dim(), &c.name)?;
            Ok(TrajectoryConstraint {
                name: format!("{}_plain", c.name),
                map: Arc::new(TrajectoryViolation {
                    inner: c.map.clone(),
                    set: c.set.clone(),
                    dim,
                }),
                set: Arc::new(SingletonSet::zeros(dim)),
            })
        })
        .collect::<Result<Vec<_>, ProblemError>>()?;
    Ok(ShootingProblem {
        constraints,
        ..prob.clone()
    })
}
