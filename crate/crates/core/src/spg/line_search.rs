//! Non-monotone Armijo line search with safeguarded quadratic interpolation.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::objective::{Objective, ObjectiveOracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchConfig {
    /// Armijo constant.
    pub beta: f64,
    pub alpha_init: f64,
    /// Number of past objective values the acceptance test compares against.
    pub memory: usize,
    /// Interpolated steps are accepted only within `[interp_lo·α, interp_hi·α]`.
    pub interp_lo: f64,
    pub interp_hi: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            beta: 1e-4,
            alpha_init: 1.0,
            memory: 10,
            interp_lo: 0.1,
            interp_hi: 0.9,
            max_backtracks: 50,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.memory == 0 {
            return Err("memory must be at least 1".into());
        }
        if !(0.0 < self.interp_lo && self.interp_lo < self.interp_hi && self.interp_hi < 1.0) {
            return Err(format!(
                "interpolation window must satisfy 0 < lo < hi < 1, got [{}, {}]",
                self.interp_lo, self.interp_hi
            ));
        }
        if !(self.alpha_init > 0.0) {
            return Err("alpha_init must be positive".into());
        }
        Ok(())
    }
}

/// Ring buffer of the objective values of the most recent accepted iterates.
#[derive(Debug, Clone)]
pub struct ObjectiveHistory {
    values: VecDeque<f64>,
    memory: usize,
}

impl ObjectiveHistory {
    pub fn new(memory: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(memory),
            memory: memory.max(1),
        }
    }

    pub fn push(&mut self, f: f64) {
        if self.values.len() == self.memory {
            self.values.pop_front();
        }
        self.values.push_back(f);
    }

    /// Objective value of the current iterate.
    pub fn latest(&self) -> Option<f64> {
        self.values.back().copied()
    }

    pub fn f_max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x_next: DVector<f64>,
    pub f_next: f64,
    /// Directional derivative `∇f(x)ᵀd`.
    pub slope: f64,
    pub f_max: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("not a descent direction (slope {slope})")]
    NonDescent { slope: f64 },
    #[error("no acceptable step after {backtracks} backtracks (last alpha {alpha:e})")]
    MaxBacktracks { backtracks: usize, alpha: f64 },
    #[error("objective history is empty")]
    EmptyHistory,
}

/// Finds `α` with `f(x + αd) ≤ f_max + αβ∇f(x)ᵀd`, where `f_max` is the largest value
/// in `history`. The last entry of `history` must be `f(x)`.
pub fn nonmonotone_line_search<O: Objective + ?Sized>(
    oracle: &mut ObjectiveOracle<'_, O>,
    x: &DVector<f64>,
    gradient: &DVector<f64>,
    d: &DVector<f64>,
    history: &ObjectiveHistory,
    cfg: &LineSearchConfig,
) -> Result<LineSearchOutcome, LineSearchError> {
    search_along(oracle, gradient.dot(d), history, cfg, |alpha| x + d * alpha)
}

/// Line search over an arbitrary path `α ↦ trial(α)` with `trial(0) = x`; the slope
/// is `∇f(x)ᵀd` for the tangent direction `d`.
pub(crate) fn search_along<O: Objective + ?Sized>(
    oracle: &mut ObjectiveOracle<'_, O>,
    slope: f64,
    history: &ObjectiveHistory,
    cfg: &LineSearchConfig,
    trial: impl Fn(f64) -> DVector<f64>,
) -> Result<LineSearchOutcome, LineSearchError> {
    // `!(slope < 0)` also rejects NaN.
    if !(slope < 0.0) {
        return Err(LineSearchError::NonDescent { slope });
    }
    let fx = history.latest().ok_or(LineSearchError::EmptyHistory)?;
    let f_max = history.f_max();
    let mut alpha = cfg.alpha_init;
    for backtracks in 0..=cfg.max_backtracks {
        let x_next = trial(alpha);
        let f_next = oracle.value(&x_next);
        if f_next <= f_max + alpha * cfg.beta * slope {
            return Ok(LineSearchOutcome {
                alpha,
                x_next,
                f_next,
                slope,
                f_max,
                backtracks,
            });
        }
        let interpolated = -0.5 * alpha * alpha * slope / (f_next - fx - alpha * slope);
        alpha = if interpolated >= cfg.interp_lo * alpha && interpolated <= cfg.interp_hi * alpha
        {
            interpolated
        } else {
            0.5 * alpha
        };
    }
    Err(LineSearchError::MaxBacktracks {
        backtracks: cfg.max_backtracks,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spg::objective::FnObjective;
    use nalgebra::dvector;

    fn history_of(values: &[f64], memory: usize) -> ObjectiveHistory {
        let mut h = ObjectiveHistory::new(memory);
        for v in values {
            h.push(*v);
        }
        h
    }

    #[test]
    fn full_step_accepted_on_quadratic() {
        let mut obj = FnObjective::new(1, |x: &DVector<f64>| 0.5 * x.norm_squared(), |x: &DVector<f64>| x.clone());
        let mut oracle = ObjectiveOracle::new(&mut obj);
        let x = dvector![1.0];
        let out = nonmonotone_line_search(
            &mut oracle,
            &x,
            &dvector![1.0],
            &dvector![-1.0],
            &history_of(&[0.5], 10),
            &LineSearchConfig::default(),
        )
        .unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.x_next, dvector![0.0]);
        assert_eq!(oracle.counters().n_f, 1);
    }

    #[test]
    fn rejects_ascent_direction() {
        let mut obj = FnObjective::new(1, |x: &DVector<f64>| x[0], |_: &DVector<f64>| dvector![1.0]);
        let mut oracle = ObjectiveOracle::new(&mut obj);
        let err = nonmonotone_line_search(
            &mut oracle,
            &dvector![0.0],
            &dvector![1.0],
            &dvector![1.0],
            &history_of(&[0.0], 1),
            &LineSearchConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LineSearchError::NonDescent { .. }));
    }

    #[test]
    fn memory_one_is_monotone_armijo() {
        // A trial value above f(x) but below an older f_max: accepted with M = 10,
        // rejected with M = 1.
        let f = |x: &DVector<f64>| if x[0] > 0.5 { 5.0 } else { x[0] * x[0] };
        let x = dvector![1.0];
        let g = dvector![-1.0];
        let d = dvector![1.0];
        let mut obj = FnObjective::new(1, f, |_: &DVector<f64>| dvector![-1.0]);
        let mut oracle = ObjectiveOracle::new(&mut obj);
        let cfg = LineSearchConfig::default();
        let loose = nonmonotone_line_search(&mut oracle, &x, &g, &d, &history_of(&[10.0, 1.0], 10), &cfg)
            .unwrap();
        assert_eq!(loose.alpha, 1.0);
        let strict = LineSearchConfig { memory: 1, ..cfg };
        let tight = nonmonotone_line_search(&mut oracle, &x, &g, &d, &history_of(&[10.0, 1.0], 1), &strict);
        assert!(matches!(tight, Err(LineSearchError::MaxBacktracks { .. })));
    }

    #[test]
    fn ring_buffer_keeps_last_m_values() {
        let h = history_of(&[9.0, 1.0, 2.0, 3.0], 3);
        assert_eq!(h.f_max(), 3.0);
        assert_eq!(h.latest(), Some(3.0));
    }
}
