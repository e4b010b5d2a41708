use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::shooting::{adjoint_vjp, cost_gradients, rollout, trajectory_cost, StateTrajectory};
use super::{OcpError, ShootingProblem};
use crate::spg::{EvalCounters, SpgIterate, SpgResult, SpgStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IlqrConfig {
    pub max_iter: usize,
    /// Stop when `‖∇_u J‖_∞` falls below this value.
    pub tol: f64,
    /// Levenberg term added to `Q_uu`. It starts at zero, jumps to `reg_min` on the
    /// first failure and grows by `reg_factor` per further failure up to `reg_max`.
    pub reg_min: f64,
    pub reg_max: f64,
    pub reg_factor: f64,
    /// Armijo constant on the predicted decrease of the forward pass.
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for IlqrConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-5,
            reg_min: 1e-6,
            reg_max: 1e2,
            reg_factor: 10.0,
            armijo: 1e-4,
            max_halvings: 20,
        }
    }
}

fn increase(reg: f64, cfg: &IlqrConfig) -> f64 {
    if reg == 0.0 {
        cfg.reg_min
    } else {
        reg * cfg.reg_factor
    }
}

struct Gains {
    k: Vec<DVector<f64>>,
    big_k: Vec<DMatrix<f64>>,
    /// Predicted decrease terms: `ΔJ(α) = α·d1 + ½α²·d2`.
    d1: f64,
    d2: f64,
}

fn backward_pass(
    prob: &ShootingProblem,
    traj: &StateTrajectory,
    u: &DVector<f64>,
    jacobians: &[(DMatrix<f64>, DMatrix<f64>)],
    reg: f64,
) -> Option<Gains> {
    let horizon = prob.horizon;
    let n = prob.control_dim();
    let cost = prob.cost.as_ref();
    let mut vx = cost.state_grad(horizon, horizon, traj.state(horizon));
    let mut vxx = cost.state_hess(horizon, horizon, traj.state(horizon));
    let mut k = vec![DVector::zeros(n); horizon];
    let mut big_k = vec![DMatrix::zeros(n, prob.state_dim()); horizon];
    let (mut d1, mut d2) = (0.0, 0.0);
    for t in (0..horizon).rev() {
        let (a, b) = &jacobians[t];
        let ut = u.rows(t * n, n).into_owned();
        let x = traj.state(t);
        let (lx, lxx) = if t == 0 {
            (DVector::zeros(x.len()), DMatrix::zeros(x.len(), x.len()))
        } else {
            (cost.state_grad(t, horizon, x), cost.state_hess(t, horizon, x))
        };
        let qx = lx + a.tr_mul(&vx);
        let qu = cost.control_grad(t, &ut) + b.tr_mul(&vx);
        let vxx_a = &vxx * a;
        let vxx_b = &vxx * b;
        let qxx = lxx + a.tr_mul(&vxx_a);
        let quu = cost.control_hess(t, &ut) + b.tr_mul(&vxx_b);
        let qux = b.tr_mul(&vxx_a);
        let quu_reg = &quu + DMatrix::identity(n, n) * reg;
        let chol = quu_reg.cholesky()?;
        let kt = -chol.solve(&qu);
        let kk = -chol.solve(&qux);

        d1 += kt.dot(&qu);
        d2 += kt.dot(&(&quu * &kt));
        vx = &qx + kk.tr_mul(&(&quu * &kt)) + kk.tr_mul(&qu) + qux.tr_mul(&kt);
        let v = &qxx + kk.tr_mul(&(&quu * &kk)) + kk.tr_mul(&qux) + qux.tr_mul(&kk);
        vxx = (&v + v.transpose()) * 0.5;
        k[t] = kt;
        big_k[t] = kk;
    }
    Some(Gains { k, big_k, d1, d2 })
}

fn forward_pass(
    prob: &ShootingProblem,
    traj: &StateTrajectory,
    u: &DVector<f64>,
    gains: &Gains,
    alpha: f64,
) -> Result<(StateTrajectory, DVector<f64>), OcpError> {
    let n = prob.control_dim();
    let mut u_new = u.clone();
    let mut states = Vec::with_capacity(prob.horizon + 1);
    states.push(prob.x0.clone());
    for t in 0..prob.horizon {
        let dx = &states[t] - traj.state(t);
        let ut = u.rows(t * n, n) + &gains.k[t] * alpha + &gains.big_k[t] * dx;
        u_new.rows_mut(t * n, n).copy_from(&ut);
        let next = prob.dynamics.step(t, &states[t], &ut);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(OcpError::NonFiniteState { t: t + 1 });
        }
        states.push(next);
    }
    Ok((StateTrajectory::from_states(states), u_new))
}

/// Iterative LQR on an unconstrained shooting problem. Returns a report with the same
/// shape and counter semantics as SPG: `n_f` counts trajectory cost evaluations
/// (forward passes), `n_grad` reduced-gradient evaluations and `n_jac` full
/// linearization sweeps and backward sweeps.
pub fn ilqr_baseline(prob: &ShootingProblem, u0: &DVector<f64>, cfg: &IlqrConfig) -> Result<SpgResult, OcpError> {
    if !prob.constraints.is_empty() || prob.control_domain.dim().is_some() {
        return Err(OcpError::InvalidProblem(
            "the iLQR baseline handles unconstrained problems only".into(),
        ));
    }
    if u0.len() != prob.num_controls() {
        return Err(OcpError::DimensionMismatch {
            what: "control trajectory",
            expected: prob.num_controls(),
            got: u0.len(),
        });
    }
    let horizon = prob.horizon;
    let n = prob.control_dim();
    let dynamics = prob.dynamics.as_ref();
    let cost = prob.cost.as_ref();
    let mut counters = EvalCounters::default();

    let mut u = u0.clone();
    let mut traj = rollout(dynamics, &prob.x0, &u)?;
    let mut j = trajectory_cost(cost, &traj, &u);
    counters.n_f += 1;
    let mut reg = 0.0;
    let mut history = Vec::new();
    let mut last_alpha = 0.0;

    let mut iter = 0;
    let status = loop {
        let (gx, gu) = cost_gradients(cost, &traj, &u);
        let grad = gu + adjoint_vjp(dynamics, &traj, &u, &gx)?;
        counters.n_grad += 1;
        counters.n_jac += 1;
        let stat = grad.amax();
        history.push(SpgIterate {
            iter,
            f: j,
            stationarity: stat,
            gamma: reg,
            alpha: last_alpha,
            slope: 0.0,
            counters,
        });
        if stat <= cfg.tol {
            break SpgStatus::Converged;
        }
        if iter >= cfg.max_iter {
            break SpgStatus::MaxIter;
        }

        let jacobians: Vec<_> = (0..horizon)
            .map(|t| dynamics.linearize(t, traj.state(t), &u.rows(t * n, n).into_owned()))
            .collect();
        counters.n_jac += 1;

        let mut accepted = None;
        while accepted.is_none() {
            let Some(gains) = backward_pass(prob, &traj, &u, &jacobians, reg) else {
                reg = increase(reg, cfg);
                if reg > cfg.reg_max {
                    break;
                }
                continue;
            };
            let mut alpha = 1.0;
            for _ in 0..=cfg.max_halvings {
                counters.n_f += 1;
                // A diverging trial counts as a rejected step.
                let Ok((traj_new, u_new)) = forward_pass(prob, &traj, &u, &gains, alpha) else {
                    alpha *= 0.5;
                    continue;
                };
                let j_new = trajectory_cost(cost, &traj_new, &u_new);
                let predicted = -(alpha * gains.d1 + 0.5 * alpha * alpha * gains.d2);
                if j_new.is_finite() && j - j_new >= cfg.armijo * predicted.max(0.0) && j_new <= j {
                    accepted = Some((traj_new, u_new, j_new, alpha));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_none() {
                reg = increase(reg, cfg);
                if reg > cfg.reg_max {
                    break;
                }
            }
        }
        let Some((traj_new, u_new, j_new, alpha)) = accepted else {
            break SpgStatus::LineSearchFailed;
        };
        traj = traj_new;
        u = u_new;
        j = j_new;
        last_alpha = alpha;
        reg /= cfg.reg_factor;
        if reg < cfg.reg_min {
            reg = 0.0;
        }
        iter += 1;
    };

    let stationarity = history.last().map(|h| h.stationarity).unwrap_or(f64::NAN);
    Ok(SpgResult {
        x_star: u,
        f_star: j,
        status,
        iterations: iter,
        stationarity,
        final_gamma: reg,
        history,
        counters,
    })
}
