use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::{DVector, Matrix2, Vector2};
use statrs::function::erf::erfc;

use super::arm::{EndEffectorMap, PlanarArm};
use super::{ik_problem, ConstrainedProblem, ProblemError};
use crate::alspg::{ConstraintBlock, ConstraintMap};
use crate::geometry::{AffineSlabSet, ProjectableSet, SecondOrderConeSet};

/// Inverse standard normal CDF: Acklam's rational approximation followed by one Halley
/// step against an `erfc`-based CDF.
pub fn normal_quantile(p: f64) -> Result<f64, ProblemError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ProblemError::QuantileDomain(p));
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549671348838169,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    let e = 0.5 * erfc(-x / SQRT_2) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x -= u / (1.0 + 0.5 * x * u);
    Ok(x)
}

/// `P(aᵀ f(q) ≤ 0) ≥ eta` for a Gaussian normal `a ~ N(mean, covariance)`.
#[derive(Debug, Clone)]
pub struct ChanceConstraint {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
    pub eta: f64,
}

impl ChanceConstraint {
    /// Symmetric square root of the covariance.
    pub fn covariance_sqrt(&self) -> Result<Matrix2<f64>, ProblemError> {
        let sym = (self.covariance + self.covariance.transpose()) * 0.5;
        if (sym - self.covariance).amax() > 1e-12 * (1.0 + self.covariance.amax()) {
            return Err(ProblemError::InvalidSpec("covariance must be symmetric".into()));
        }
        let eig = sym.symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min < -1e-12 * (1.0 + eig.eigenvalues.amax()) {
            return Err(ProblemError::NotPsd(min));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        Ok(eig.eigenvectors * Matrix2::from_diagonal(&roots) * eig.eigenvectors.transpose())
    }
}

/// `q ↦ [Σ^{1/2} f(q); −μᵀf(q)/κ]` with `κ = Ψ⁻¹(η)`; the chance constraint holds
/// exactly when this lies in the second-order cone.
struct ConeMap {
    ee: EndEffectorMap,
    sqrt_sigma: Matrix2<f64>,
    mean: Vector2<f64>,
    kappa: f64,
}

impl ConstraintMap for ConeMap {
    fn input_dim(&self) -> usize {
        self.ee.input_dim()
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn value(&self, q: &DVector<f64>) -> DVector<f64> {
        let (p, _) = self.ee.arm.fk(q);
        let s = self.sqrt_sigma * p;
        DVector::from_vec(vec![s[0], s[1], -self.mean.dot(&p) / self.kappa])
    }

    fn vjp(&self, q: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let (_, j) = self.ee.arm.fk(q);
        let w = self.sqrt_sigma.transpose() * Vector2::new(r[0], r[1]) - self.mean * (r[2] / self.kappa);
        j.tr_mul(&w)
    }
}

/// Inverse kinematics `min ‖q − q₀‖²` over the joint limits under a Gaussian chance
/// constraint on the end-effector. At `η = 0.5` the constraint reduces to the
/// halfspace `μᵀf(q) ≤ 0`; below that level the feasible set is not convex and the
/// problem is rejected.
pub fn robust_ik_problem(
    arm: &PlanarArm,
    q0: &DVector<f64>,
    chance: &ChanceConstraint,
) -> Result<ConstrainedProblem, ProblemError> {
    if !(chance.eta >= 0.5 && chance.eta < 1.0) {
        return Err(ProblemError::InvalidSpec(format!(
            "probability level must lie in [0.5, 1), got {}",
            chance.eta
        )));
    }
    let sqrt_sigma = chance.covariance_sqrt()?;
    let kappa = normal_quantile(chance.eta)?;
    let ee = EndEffectorMap { arm: arm.clone() };

    let (map, set): (Arc<dyn ConstraintMap>, Arc<dyn ProjectableSet>) = if kappa.abs() < 1e-12 {
        let normal = DVector::from_column_slice(chance.mean.as_slice());
        (Arc::new(ee), Arc::new(AffineSlabSet::halfspace(normal, 0.0)?))
    } else {
        (
            Arc::new(ConeMap {
                ee,
                sqrt_sigma,
                mean: chance.mean,
                kappa,
            }),
            Arc::new(SecondOrderConeSet::new()),
        )
    };
    let mut prob = ik_problem(arm, q0, Arc::new(crate::geometry::WholeSpace))?;
    prob.name = "robust_ik".into();
    prob.blocks = vec![ConstraintBlock::new("chance", map, set)];
    Ok(prob)
}
