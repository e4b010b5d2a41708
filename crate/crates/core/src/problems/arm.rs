use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2xX};

use super::{ConstrainedProblem, ProblemError};
use crate::alspg::{ConstraintBlock, ConstraintMap};
use crate::geometry::{BoxSet, Point2, ProjectableSet};

/// Planar serial chain of revolute joints; joint angles accumulate along the chain.
#[derive(Debug, Clone)]
pub struct PlanarArm {
    pub link_lengths: Vec<f64>,
    pub joint_limits: BoxSet,
    pub base: Point2,
}

impl PlanarArm {
    pub fn new(link_lengths: Vec<f64>, joint_limits: BoxSet) -> Result<Self, ProblemError> {
        if link_lengths.is_empty() || link_lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(ProblemError::InvalidSpec(format!(
                "link lengths must be positive, got {link_lengths:?}"
            )));
        }
        if joint_limits.lower().len() != link_lengths.len() {
            return Err(ProblemError::InvalidSpec(format!(
                "{} joint limits for {} links",
                joint_limits.lower().len(),
                link_lengths.len()
            )));
        }
        Ok(Self {
            link_lengths,
            joint_limits,
            base: Point2::zeros(),
        })
    }

    /// Arm with every joint limited to `[−limit, limit]`.
    pub fn with_symmetric_limits(link_lengths: Vec<f64>, limit: f64) -> Result<Self, ProblemError> {
        let limits = BoxSet::uniform(link_lengths.len(), -limit, limit)?;
        Self::new(link_lengths, limits)
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Point at fraction `s ∈ [0, 1]` along link `link`, with its 2×dof Jacobian.
    pub fn link_point(&self, q: &DVector<f64>, link: usize, s: f64) -> (Point2, Matrix2xX<f64>) {
        let n = self.dof();
        let mut p = self.base;
        let mut jac = Matrix2xX::zeros(n);
        let mut phi = 0.0;
        for i in 0..=link {
            phi += q[i];
            let len = if i == link { s * self.link_lengths[i] } else { self.link_lengths[i] };
            let (sin, cos) = phi.sin_cos();
            p += Point2::new(len * cos, len * sin);
            // Link i moves with every joint up to and including i.
            for j in 0..=i {
                jac[(0, j)] -= len * sin;
                jac[(1, j)] += len * cos;
            }
        }
        (p, jac)
    }

    /// End-effector position and Jacobian.
    pub fn fk(&self, q: &DVector<f64>) -> (Point2, Matrix2xX<f64>) {
        self.link_point(q, self.dof() - 1, 1.0)
    }

    /// Center of mass of uniform links with mass proportional to length.
    pub fn center_of_mass(&self, q: &DVector<f64>) -> (Point2, Matrix2xX<f64>) {
        let total = self.reach();
        let mut c = Point2::zeros();
        let mut jac = Matrix2xX::zeros(self.dof());
        for (i, l) in self.link_lengths.iter().enumerate() {
            let (p, j) = self.link_point(q, i, 0.5);
            c += p * (l / total);
            jac += j * (l / total);
        }
        (c, jac)
    }
}

/// `arm_fk` as a free function: end-effector position and Jacobian.
pub fn arm_fk(arm: &PlanarArm, q: &DVector<f64>) -> (Point2, Matrix2xX<f64>) {
    arm.fk(q)
}

/// End-effector position as a constraint map.
#[derive(Debug, Clone)]
pub struct EndEffectorMap {
    pub arm: PlanarArm,
}

impl ConstraintMap for EndEffectorMap {
    fn input_dim(&self) -> usize {
        self.arm.dof()
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn value(&self, q: &DVector<f64>) -> DVector<f64> {
        let (p, _) = self.arm.fk(q);
        DVector::from_column_slice(p.as_slice())
    }

    fn vjp(&self, q: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let (_, j) = self.arm.fk(q);
        j.tr_mul(r)
    }
}

/// Center of mass as a constraint map.
#[derive(Debug, Clone)]
pub struct CenterOfMassMap {
    pub arm: PlanarArm,
}

impl ConstraintMap for CenterOfMassMap {
    fn input_dim(&self) -> usize {
        self.arm.dof()
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn value(&self, q: &DVector<f64>) -> DVector<f64> {
        let (c, _) = self.arm.center_of_mass(q);
        DVector::from_column_slice(c.as_slice())
    }

    fn vjp(&self, q: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let (_, j) = self.arm.center_of_mass(q);
        j.tr_mul(r)
    }
}

/// `min_{q ∈ C_q} ‖q − q₀‖²` subject to `f(q) ∈ target`, starting from `q₀` clamped to
/// the joint limits.
pub fn ik_problem(
    arm: &PlanarArm,
    q0: &DVector<f64>,
    target: Arc<dyn ProjectableSet>,
) -> Result<ConstrainedProblem, ProblemError> {
    if q0.len() != arm.dof() {
        return Err(ProblemError::InvalidSpec(format!(
            "q0 has {} entries for a {}-joint arm",
            q0.len(),
            arm.dof()
        )));
    }
    if let Some(d) = target.dim() {
        if d != 2 {
            return Err(ProblemError::InvalidSpec(format!("target set must be planar, has dimension {d}")));
        }
    }
    let block = ConstraintBlock::new(
        "end_effector",
        Arc::new(EndEffectorMap { arm: arm.clone() }),
        target,
    );
    let domain: Arc<dyn ProjectableSet> = Arc::new(arm.joint_limits.clone());
    let start = domain.project(q0)?;
    Ok(ConstrainedProblem {
        name: "ik".into(),
        center: q0.clone(),
        domain,
        blocks: vec![block],
        start,
    })
}

/// Dense 2×n copy of a Jacobian, convenient for tests and callers using `DMatrix`.
pub fn jacobian_to_dmatrix(j: &Matrix2xX<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(2, j.ncols(), |r, c| j[(r, c)])
}
