//! Planar stand-in for whole-body reaching on a humanoid: a floating-base chain whose
//! base ("foot") pose is pinned by an equality, with its center of mass kept over a
//! support box and its hand placed in an annulus around a target.

use std::sync::Arc;

use nalgebra::{DVector, Matrix2xX};

use super::arm::PlanarArm;
use super::{ConstrainedProblem, ProblemError};
use crate::alspg::{ConstraintBlock, ConstraintMap};
use crate::geometry::{BoxSet, Point2, ProjectableSet, QuadricAnnulusSet, SingletonSet};

/// Number of base coordinates `[x, y, θ]` ahead of the joint angles.
const BASE: usize = 3;

#[derive(Debug, Clone)]
pub struct TalosScene {
    pub arm: PlanarArm,
    /// Pinned base pose `[x, y, θ]`.
    pub foot: [f64; 3],
    pub com_support: BoxSet,
    pub hand_target: QuadricAnnulusSet,
    /// Preferred configuration `[x, y, θ, q…]`.
    pub posture: DVector<f64>,
}

impl TalosScene {
    /// Five unit links standing upright on a pinned foot, reaching for a point ahead.
    pub fn standard(hand: Point2, inner: f64, outer: f64) -> Result<Self, ProblemError> {
        let arm = PlanarArm::with_symmetric_limits(vec![1.0; 5], 2.0)?;
        let mut posture = DVector::zeros(BASE + 5);
        posture[2] = std::f64::consts::FRAC_PI_2;
        Ok(Self {
            arm,
            foot: [0.0, 0.0, std::f64::consts::FRAC_PI_2],
            com_support: BoxSet::new(
                DVector::from_vec(vec![-0.6, 0.0]),
                DVector::from_vec(vec![0.6, f64::INFINITY]),
            )?,
            hand_target: QuadricAnnulusSet::from_radii(
                DVector::from_column_slice(hand.as_slice()),
                inner,
                outer,
            )?,
            posture,
        })
    }

    pub fn dim(&self) -> usize {
        BASE + self.arm.dof()
    }
}

/// Point at fraction `s` along `link` of the chain mounted at base pose `x[0..3]`, with
/// its Jacobian with respect to the full decision vector.
fn floating_point(arm: &PlanarArm, x: &DVector<f64>, link: usize, s: f64) -> (Point2, Matrix2xX<f64>) {
    let n = arm.dof();
    let mut local = arm.clone();
    local.base = Point2::new(x[0], x[1]);
    let mut q = x.rows(BASE, n).into_owned();
    q[0] += x[2];
    let (p, jq) = local.link_point(&q, link, s);
    let mut jac = Matrix2xX::zeros(BASE + n);
    jac[(0, 0)] = 1.0;
    jac[(1, 1)] = 1.0;
    // The base angle shifts every cumulative angle, exactly like the first joint.
    jac.column_mut(2).copy_from(&jq.column(0));
    jac.columns_mut(BASE, n).copy_from(&jq);
    (p, jac)
}

#[derive(Debug, Clone, Copy)]
enum Probe {
    Hand,
    Com,
}

struct FloatingMap {
    arm: PlanarArm,
    probe: Probe,
}

impl FloatingMap {
    fn eval(&self, x: &DVector<f64>) -> (Point2, Matrix2xX<f64>) {
        match self.probe {
            Probe::Hand => floating_point(&self.arm, x, self.arm.dof() - 1, 1.0),
            Probe::Com => {
                let total = self.arm.reach();
                let mut c = Point2::zeros();
                let mut jac = Matrix2xX::zeros(BASE + self.arm.dof());
                for (i, l) in self.arm.link_lengths.iter().enumerate() {
                    let (p, j) = floating_point(&self.arm, x, i, 0.5);
                    c += p * (l / total);
                    jac += j * (l / total);
                }
                (c, jac)
            }
        }
    }
}

impl ConstraintMap for FloatingMap {
    fn input_dim(&self) -> usize {
        BASE + self.arm.dof()
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(self.eval(x).0.as_slice())
    }

    fn vjp(&self, x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        self.eval(x).1.tr_mul(r)
    }
}

struct BasePose(usize);

impl ConstraintMap for BasePose {
    fn input_dim(&self) -> usize {
        self.0
    }

    fn output_dim(&self) -> usize {
        BASE
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, BASE).into_owned()
    }

    fn vjp(&self, _x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.0);
        out.rows_mut(0, BASE).copy_from(r);
        out
    }
}

/// Stay close to the posture while pinning the foot, balancing the center of mass over
/// the support box and placing the hand in the target annulus.
pub fn talos_analog(scene: &TalosScene) -> Result<ConstrainedProblem, ProblemError> {
    let n = scene.dim();
    if scene.posture.len() != n {
        return Err(ProblemError::InvalidSpec(format!(
            "posture has {} entries, expected {n}",
            scene.posture.len()
        )));
    }
    let mut lower = DVector::from_element(n, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(n, f64::INFINITY);
    lower.rows_mut(BASE, scene.arm.dof()).copy_from(scene.arm.joint_limits.lower());
    upper.rows_mut(BASE, scene.arm.dof()).copy_from(scene.arm.joint_limits.upper());
    let domain: Arc<dyn ProjectableSet> = Arc::new(BoxSet::new(lower, upper)?);

    let blocks = vec![
        ConstraintBlock::new(
            "foot",
            Arc::new(BasePose(n)),
            Arc::new(SingletonSet::new(DVector::from_column_slice(&scene.foot))),
        ),
        ConstraintBlock::new(
            "com",
            Arc::new(FloatingMap {
                arm: scene.arm.clone(),
                probe: Probe::Com,
            }),
            Arc::new(scene.com_support.clone()),
        ),
        ConstraintBlock::new(
            "hand",
            Arc::new(FloatingMap {
                arm: scene.arm.clone(),
                probe: Probe::Hand,
            }),
            Arc::new(scene.hand_target.clone()),
        ),
    ];
    let start = domain.project(&scene.posture)?;
    Ok(ConstrainedProblem {
        name: "talos".into(),
        center: scene.posture.clone(),
        domain,
        blocks,
        start,
    })
}
