use std::io;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::line_search::{search_along, LineSearchConfig, LineSearchError, ObjectiveHistory};
use super::objective::{EvalCounters, Objective, ObjectiveOracle};
use super::SpgError;
use crate::geometry::ProjectableSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpgConfig {
    /// Stationarity tolerance on `‖Π(x − ∇f(x)) − x‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step of the probe used to estimate the first spectral stepsize.
    pub gamma_small: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub line_search: LineSearchConfig,
}

impl Default for SpgConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 1000,
            gamma_small: 1e-4,
            gamma_min: 1e-10,
            gamma_max: 1e10,
            line_search: LineSearchConfig::default(),
        }
    }
}

impl SpgConfig {
    pub fn validate(&self) -> Result<(), SpgError> {
        if !(self.tol > 0.0) {
            return Err(SpgError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if !(0.0 < self.gamma_min && self.gamma_min < self.gamma_max) {
            return Err(SpgError::InvalidConfig(format!(
                "need 0 < gamma_min < gamma_max, got [{}, {}]",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(self.gamma_small > 0.0) {
            return Err(SpgError::InvalidConfig("gamma_small must be positive".into()));
        }
        self.line_search.validate().map_err(SpgError::InvalidConfig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpgStatus {
    Converged,
    MaxIter,
    LineSearchFailed,
}

/// State at iterate `k` and the step taken from it (`alpha = 0` on the last record).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpgIterate {
    pub iter: usize,
    pub f: f64,
    pub stationarity: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// `∇f(x_k)ᵀd_k` of the accepted step.
    pub slope: f64,
    pub counters: EvalCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpgResult {
    pub x_star: DVector<f64>,
    pub f_star: f64,
    pub status: SpgStatus,
    pub iterations: usize,
    pub stationarity: f64,
    /// Spectral stepsize at termination; used to warm-start a follow-up solve.
    pub final_gamma: f64,
    pub history: Vec<SpgIterate>,
    pub counters: EvalCounters,
}

impl SpgResult {
    /// Writes `iter,f,stationarity,gamma,alpha,n_f,n_grad` rows with a header.
    pub fn write_history_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "f", "stationarity", "gamma", "alpha", "n_f", "n_grad"])?;
        for h in &self.history {
            w.write_record(&[
                h.iter.to_string(),
                h.f.to_string(),
                h.stationarity.to_string(),
                h.gamma.to_string(),
                h.alpha.to_string(),
                h.counters.n_f.to_string(),
                h.counters.n_grad.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Barzilai–Borwein stepsize from a step `s` and gradient change `y`: `s'y/y'y` when
/// `s's/s'y < 2·s'y/y'y`, otherwise `s's/s'y − ½·s'y/y'y`, clamped to
/// `[gamma_min, gamma_max]`. Non-positive curvature `s'y ≤ 0` yields `gamma_max`.
pub fn spectral_stepsize(s: &DVector<f64>, y: &DVector<f64>, cfg: &SpgConfig) -> f64 {
    let sy = s.dot(y);
    if !(sy > 0.0) {
        return cfg.gamma_max;
    }
    let long = s.norm_squared() / sy;
    let short = sy / y.norm_squared();
    let gamma = if long < 2.0 * short {
        short
    } else {
        long - 0.5 * short
    };
    if gamma.is_nan() {
        return cfg.gamma_max;
    }
    gamma.clamp(cfg.gamma_min, cfg.gamma_max)
}

pub(crate) fn stationarity(
    domain: &dyn ProjectableSet,
    x: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<f64, SpgError> {
    Ok((domain.project(&(x - g))? - x).amax())
}

pub fn spg_minimize<O: Objective + ?Sized>(
    oracle: &mut ObjectiveOracle<'_, O>,
    domain: &dyn ProjectableSet,
    x0: &DVector<f64>,
    cfg: &SpgConfig,
) -> Result<SpgResult, SpgError> {
    spg_minimize_warm(oracle, domain, x0, cfg, None)
}

/// Spectral projected gradient descent. With `gamma0 = None` the first stepsize is
/// estimated from a probe step `x₀ − γ_small∇f(x₀)`, which costs one extra gradient.
pub fn spg_minimize_warm<O: Objective + ?Sized>(
    oracle: &mut ObjectiveOracle<'_, O>,
    domain: &dyn ProjectableSet,
    x0: &DVector<f64>,
    cfg: &SpgConfig,
    gamma0: Option<f64>,
) -> Result<SpgResult, SpgError> {
    cfg.validate()?;
    if x0.len() != oracle.dim() {
        return Err(SpgError::DimensionMismatch {
            expected: oracle.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SpgError::NonFinite("initial point"));
    }
    let convex = domain.is_convex();
    let mut x = domain.project(x0)?;
    let mut f = oracle.value(&x);
    if !f.is_finite() {
        return Err(SpgError::NonFinite("objective at the initial point"));
    }
    let mut g = oracle.gradient(&x);

    let mut gamma = match gamma0 {
        Some(gamma) => gamma.clamp(cfg.gamma_min, cfg.gamma_max),
        None => {
            let probe = &x - &g * cfg.gamma_small;
            let y = oracle.gradient(&probe) - &g;
            let s = probe - &x;
            if s.dot(&y) > 0.0 {
                spectral_stepsize(&s, &y, cfg)
            } else {
                1.0
            }
        }
    };

    let mut fhist = ObjectiveHistory::new(cfg.line_search.memory);
    fhist.push(f);
    let mut history = Vec::new();
    let mut best = (f, x.clone());

    let mut k = 0;
    let status = loop {
        let stat = stationarity(domain, &x, &g)?;
        let mut record = SpgIterate {
            iter: k,
            f,
            stationarity: stat,
            gamma,
            alpha: 0.0,
            slope: 0.0,
            counters: oracle.counters(),
        };
        if stat <= cfg.tol {
            history.push(record);
            break SpgStatus::Converged;
        }
        if k >= cfg.max_iter {
            history.push(record);
            break SpgStatus::MaxIter;
        }

        let target = domain.project(&(&x - &g * gamma))?;
        let d = &target - &x;
        let slope = g.dot(&d);
        let step = if convex {
            search_along(oracle, slope, &fhist, &cfg.line_search, |alpha| &x + &d * alpha)
        } else {
            // Chords of a non-convex domain can leave it; re-project the trial point.
            search_along(oracle, slope, &fhist, &cfg.line_search, |alpha| {
                domain.project(&(&x + &d * alpha)).unwrap_or_else(|_| x.clone())
            })
        };
        let step = match step {
            Ok(step) => step,
            Err(LineSearchError::NonDescent { .. } | LineSearchError::MaxBacktracks { .. }) => {
                history.push(record);
                break SpgStatus::LineSearchFailed;
            }
            Err(LineSearchError::EmptyHistory) => unreachable!("history seeded with f(x0)"),
        };
        record.alpha = step.alpha;
        record.slope = slope;
        history.push(record);

        let g_next = oracle.gradient(&step.x_next);
        let s = &step.x_next - &x;
        let y = &g_next - &g;
        gamma = spectral_stepsize(&s, &y, cfg);
        x = step.x_next;
        f = step.f_next;
        g = g_next;
        fhist.push(f);
        if f < best.0 {
            best = (f, x.clone());
        }
        k += 1;
    };

    let (x_star, f_star, stat) = match status {
        SpgStatus::Converged => {
            let stat = history.last().map(|h| h.stationarity).unwrap_or(0.0);
            (x, f, stat)
        }
        _ if best.0 < f => {
            let g_best = oracle.gradient(&best.1);
            let stat = stationarity(domain, &best.1, &g_best)?;
            (best.1, best.0, stat)
        }
        _ => {
            let stat = history.last().map(|h| h.stationarity).unwrap_or(f64::NAN);
            (x, f, stat)
        }
    };
    Ok(SpgResult {
        x_star,
        f_star,
        status,
        iterations: k,
        stationarity: stat,
        final_gamma: gamma,
        history,
        counters: oracle.counters(),
    })
}
