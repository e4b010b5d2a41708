//! Augmented Lagrangian outer loop over constraints of the form `g_i(x) ∈ C_i`.
//!
//! Each block contributes `ρ/2 · dist²(g(x) + λ/ρ, C)` to the merit function, so the
//! subproblem only needs the projection onto `C` and a vector-Jacobian product of `g`.
//! The subproblem `min_{x ∈ D} ℒ` is handed to [`spg_minimize_warm`].

use std::io;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, ProjectableSet};
use crate::spg::{
    spg_minimize_warm, EvalCounters, Objective, ObjectiveOracle, SpgConfig, SpgError, SpgStatus,
};

/// A differentiable map `g: ℝⁿ → ℝᵐ` with a vector-Jacobian product.
pub trait ConstraintMap: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `∇g(x)ᵀ r`.
    fn vjp(&self, x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64>;
}

/// Constraint map built from a pair of closures.
pub struct FnConstraint<G, J> {
    input_dim: usize,
    output_dim: usize,
    value: G,
    vjp: J,
}

impl<G, J> FnConstraint<G, J>
where
    G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync,
{
    pub fn new(input_dim: usize, output_dim: usize, value: G, vjp: J) -> Self {
        Self {
            input_dim,
            output_dim,
            value,
            vjp,
        }
    }
}

impl<G, J> ConstraintMap for FnConstraint<G, J>
where
    G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync,
{
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.value)(x)
    }

    fn vjp(&self, x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        (self.vjp)(x, r)
    }
}

/// The identity map, for constraining the decision vector itself.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap(pub usize);

impl ConstraintMap for IdentityMap {
    fn input_dim(&self) -> usize {
        self.0
    }

    fn output_dim(&self) -> usize {
        self.0
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn vjp(&self, _x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        r.clone()
    }
}

/// One constraint `g(x) ∈ C` with its multiplier and penalty.
#[derive(Clone)]
pub struct ConstraintBlock {
    pub name: String,
    pub map: Arc<dyn ConstraintMap>,
    pub set: Arc<dyn ProjectableSet>,
    pub lambda: DVector<f64>,
    pub rho: f64,
}

impl std::fmt::Debug for ConstraintBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintBlock")
            .field("name", &self.name)
            .field("set", &self.set)
            .field("lambda", &self.lambda)
            .field("rho", &self.rho)
            .finish()
    }
}

impl ConstraintBlock {
    /// Block with `λ = 0` and `ρ = 0.1`.
    pub fn new(
        name: impl Into<String>,
        map: Arc<dyn ConstraintMap>,
        set: Arc<dyn ProjectableSet>,
    ) -> Self {
        let m = map.output_dim();
        Self {
            name: name.into(),
            map,
            set,
            lambda: DVector::zeros(m),
            rho: 0.1,
        }
    }

    fn validate(&self, n: usize) -> Result<(), AlspgError> {
        let m = self.map.output_dim();
        let bad = |what: String| AlspgError::MalformedBlock {
            name: self.name.clone(),
            what,
        };
        if self.map.input_dim() != n {
            return Err(bad(format!(
                "map expects input of dimension {}, decision vector has {n}",
                self.map.input_dim()
            )));
        }
        if let Some(d) = self.set.dim() {
            if d != m {
                return Err(bad(format!("map output has dimension {m}, set has {d}")));
            }
        }
        if self.lambda.len() != m {
            return Err(bad(format!("multiplier has dimension {}, expected {m}", self.lambda.len())));
        }
        if !(self.rho > 0.0) {
            return Err(bad(format!("penalty must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    /// `w − Π(w)` with `w = g + λ/ρ`.
    fn shifted_residual(&self, g: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let w = g + &self.lambda / self.rho;
        let p = self.set.project(&w)?;
        Ok(w - p)
    }

    /// `‖g − Π(g + λ/ρ)‖`.
    fn v(&self, g: &DVector<f64>) -> Result<f64, GeometryError> {
        let w = g + &self.lambda / self.rho;
        Ok((g - self.set.project(&w)?).norm())
    }
}

/// The augmented Lagrangian of an objective and a list of blocks, as an [`Objective`].
///
/// Constraint values of the most recent point are cached, so a gradient request at the
/// point last passed to `value` does not re-evaluate the maps.
pub struct AugmentedLagrangian<'a, O: Objective + ?Sized> {
    objective: &'a mut O,
    blocks: &'a [ConstraintBlock],
    cache: Option<(DVector<f64>, Vec<DVector<f64>>)>,
    n_g: usize,
    n_jac: usize,
}

impl<'a, O: Objective + ?Sized> AugmentedLagrangian<'a, O> {
    pub fn new(objective: &'a mut O, blocks: &'a [ConstraintBlock]) -> Self {
        Self {
            objective,
            blocks,
            cache: None,
            n_g: 0,
            n_jac: 0,
        }
    }

    /// Constraint values `g_i(x)` for every block.
    pub fn constraint_values(&mut self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        if let Some((cx, gs)) = &self.cache {
            if cx == x {
                return gs.clone();
            }
        }
        let gs: Vec<_> = self.blocks.iter().map(|b| b.map.value(x)).collect();
        self.n_g += self.blocks.len();
        self.cache = Some((x.clone(), gs.clone()));
        gs
    }

    fn penalty(&mut self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        let gs = self.constraint_values(x);
        let mut total = 0.0;
        for (b, g) in self.blocks.iter().zip(&gs) {
            total += 0.5 * b.rho * b.shifted_residual(g)?.norm_squared();
        }
        Ok(total)
    }

    fn penalty_gradient(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let gs = self.constraint_values(x);
        let mut grad = DVector::zeros(x.len());
        for (b, g) in self.blocks.iter().zip(&gs) {
            let r = b.shifted_residual(g)?;
            if r.iter().all(|v| *v == 0.0) {
                continue;
            }
            grad += b.map.vjp(x, &(r * b.rho));
            self.n_jac += 1;
        }
        Ok(grad)
    }
}

impl<O: Objective + ?Sized> Objective for AugmentedLagrangian<'_, O> {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        let f = self.objective.value(x);
        match self.penalty(x) {
            Ok(p) => f + p,
            Err(_) => f64::NAN,
        }
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.objective.gradient(x);
        match self.penalty_gradient(x) {
            Ok(p) => g + p,
            Err(_) => DVector::from_element(x.len(), f64::NAN),
        }
    }

    fn work(&self) -> EvalCounters {
        self.objective.work()
            + EvalCounters {
                n_g: self.n_g,
                n_jac: self.n_jac,
                ..EvalCounters::default()
            }
    }
}

/// `f(x) + Σ ρ_i/2 ‖g_i(x) + λ_i/ρ_i − Π(g_i(x) + λ_i/ρ_i)‖²`.
pub fn al_value<O: Objective + ?Sized>(
    x: &DVector<f64>,
    blocks: &[ConstraintBlock],
    f: &mut O,
) -> f64 {
    AugmentedLagrangian::new(f, blocks).value(x)
}

/// `∇f(x) + Σ ρ_i ∇g_i(x)ᵀ (w_i − Π(w_i))` with `w_i = g_i(x) + λ_i/ρ_i`.
pub fn al_gradient<O: Objective + ?Sized>(
    x: &DVector<f64>,
    blocks: &[ConstraintBlock],
    f: &mut O,
) -> DVector<f64> {
    AugmentedLagrangian::new(f, blocks).gradient(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlspgConfig {
    pub rho0: f64,
    /// Termination threshold on `max_i V_i`.
    pub outer_tol: f64,
    pub penalty_growth: f64,
    /// The penalty of a block is kept when `V_{k+1} ≤ decrease_ratio · V_k` and grown
    /// otherwise. `1.0` keeps it whenever `V` does not increase.
    pub decrease_ratio: f64,
    pub max_outer: usize,
    /// Multiplier entries are clamped to `±lambda_clip`.
    pub lambda_clip: f64,
    /// Penalty cap. A block that still needs a larger penalty once it sits at the cap
    /// ends the solve with [`AlspgStatus::Stalled`].
    pub rho_max: f64,
    /// Start the inner tolerance at `inner_tol_start` and tighten it tenfold per outer
    /// iteration down to `inner.tol`. When off, every subproblem uses `inner.tol`.
    pub inner_tol_schedule: bool,
    pub inner_tol_start: f64,
    pub inner: SpgConfig,
}

impl Default for AlspgConfig {
    fn default() -> Self {
        Self {
            rho0: 0.1,
            outer_tol: 1e-4,
            penalty_growth: 10.0,
            decrease_ratio: 0.5,
            max_outer: 100,
            lambda_clip: 1e8,
            rho_max: 1e8,
            inner_tol_schedule: true,
            inner_tol_start: 1e-3,
            inner: SpgConfig::default(),
        }
    }
}

impl AlspgConfig {
    pub fn validate(&self) -> Result<(), AlspgError> {
        let bad = |m: String| Err(AlspgError::InvalidConfig(m));
        if !(self.rho0 > 0.0) {
            return bad(format!("rho0 must be positive, got {}", self.rho0));
        }
        if !(self.penalty_growth > 1.0) {
            return bad(format!("penalty_growth must exceed 1, got {}", self.penalty_growth));
        }
        if !(self.decrease_ratio > 0.0 && self.decrease_ratio <= 1.0) {
            return bad(format!("decrease_ratio must lie in (0, 1], got {}", self.decrease_ratio));
        }
        if !(self.outer_tol > 0.0) {
            return bad(format!("outer_tol must be positive, got {}", self.outer_tol));
        }
        if !(self.lambda_clip > 0.0) {
            return bad("lambda_clip must be positive".into());
        }
        if !(self.rho_max >= self.rho0) {
            return bad(format!("rho_max must be at least rho0, got {}", self.rho_max));
        }
        self.inner.validate().map_err(AlspgError::from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlspgStatus {
    Converged,
    MaxOuter,
    InnerFailed,
    /// The violation stopped decreasing with every penalty at its cap; typically an
    /// infeasible local minimum of the violation.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub name: String,
    pub lambda: DVector<f64>,
    pub rho: f64,
    pub v: f64,
}

/// Summary of one outer iteration, taken after the multiplier and penalty updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterIterate {
    pub outer: usize,
    /// Augmented Lagrangian value at the subproblem solution.
    pub merit: f64,
    pub max_v: f64,
    pub max_rho: f64,
    pub inner_tol: f64,
    pub inner_iterations: usize,
    pub inner_status: SpgStatus,
    /// Projected-gradient stationarity of the subproblem solution.
    pub inner_stationarity: f64,
    /// Cumulative counters at the end of this outer iteration.
    pub counters: EvalCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlspgResult {
    pub x_star: DVector<f64>,
    /// Objective `f` (without penalty terms) at `x_star`.
    pub f_star: f64,
    pub blocks: Vec<BlockReport>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub status: AlspgStatus,
    pub counters: EvalCounters,
    pub trace: Vec<OuterIterate>,
}

impl AlspgResult {
    pub fn max_v(&self) -> f64 {
        self.blocks.iter().map(|b| b.v).fold(0.0, f64::max)
    }

    /// Writes one row per outer iteration with a header.
    pub fn write_trace_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "outer",
            "merit",
            "max_v",
            "max_rho",
            "inner_tol",
            "inner_iterations",
            "n_f",
            "n_grad",
            "n_g",
            "n_jac",
        ])?;
        for t in &self.trace {
            w.write_record(&[
                t.outer.to_string(),
                t.merit.to_string(),
                t.max_v.to_string(),
                t.max_rho.to_string(),
                t.inner_tol.to_string(),
                t.inner_iterations.to_string(),
                t.counters.n_f.to_string(),
                t.counters.n_grad.to_string(),
                t.counters.n_g.to_string(),
                t.counters.n_jac.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlspgError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("constraint block `{name}`: {what}")]
    MalformedBlock { name: String, what: String },
    #[error(transparent)]
    Spg(#[from] SpgError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Solves `min f(x)` over `x ∈ domain` subject to `g_i(x) ∈ C_i` for every block.
///
/// Blocks start from `λ = 0` and `ρ = cfg.rho0` regardless of their stored values.
pub fn alspg_solve<O: Objective + ?Sized>(
    f: &mut O,
    domain: &dyn ProjectableSet,
    blocks: &[ConstraintBlock],
    x0: &DVector<f64>,
    cfg: &AlspgConfig,
) -> Result<AlspgResult, AlspgError> {
    cfg.validate()?;
    let n = f.dim();
    if x0.len() != n {
        return Err(SpgError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        }
        .into());
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SpgError::NonFinite("initial point").into());
    }
    let mut blocks: Vec<ConstraintBlock> = blocks
        .iter()
        .map(|b| ConstraintBlock {
            lambda: DVector::zeros(b.map.output_dim()),
            rho: cfg.rho0,
            ..b.clone()
        })
        .collect();
    for b in &blocks {
        b.validate(n)?;
    }

    let mut counters = EvalCounters::default();
    let mut x = domain.project(x0)?;
    let mut v_prev: Vec<f64> = Vec::with_capacity(blocks.len());
    for b in &blocks {
        v_prev.push(b.v(&b.map.value(&x))?);
        counters.n_g += 1;
    }

    let mut gamma = None;
    let mut trace = Vec::new();
    let mut inner_iterations = 0;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut status = AlspgStatus::MaxOuter;
    let mut inner_tol = if cfg.inner_tol_schedule && !blocks.is_empty() {
        cfg.inner_tol_start.max(cfg.inner.tol)
    } else {
        cfg.inner.tol
    };

    let mut outer = 0;
    while outer < cfg.max_outer {
        let inner_cfg = SpgConfig {
            tol: inner_tol,
            ..cfg.inner
        };
        let (res, gs) = {
            let mut al = AugmentedLagrangian::new(&mut *f, &blocks);
            let mut oracle = ObjectiveOracle::new(&mut al);
            let res = spg_minimize_warm(&mut oracle, domain, &x, &inner_cfg, gamma)?;
            counters += oracle.counters();
            let before = al.work();
            let gs = al.constraint_values(&res.x_star);
            counters.n_g += (al.work() - before).n_g;
            (res, gs)
        };
        inner_iterations += res.iterations;
        outer += 1;
        let failed = res.status == SpgStatus::LineSearchFailed && res.iterations == 0;
        x = res.x_star;
        gamma = Some(res.final_gamma);

        let mut max_v: f64 = 0.0;
        let mut stalled = false;
        for ((b, g), vp) in blocks.iter_mut().zip(&gs).zip(v_prev.iter_mut()) {
            let r = b.shifted_residual(g)?;
            b.lambda = (r * b.rho).map(|l| l.clamp(-cfg.lambda_clip, cfg.lambda_clip));
            let v = b.v(g)?;
            if v > cfg.decrease_ratio * *vp {
                if b.rho >= cfg.rho_max {
                    stalled = true;
                }
                b.rho = (b.rho * cfg.penalty_growth).min(cfg.rho_max);
            }
            *vp = v;
            max_v = max_v.max(v);
        }

        trace.push(OuterIterate {
            outer,
            merit: res.f_star,
            max_v,
            max_rho: blocks.iter().map(|b| b.rho).fold(0.0, f64::max),
            inner_tol,
            inner_iterations: res.iterations,
            inner_status: res.status,
            inner_stationarity: res.stationarity,
            counters,
        });
        if best.as_ref().is_none_or(|(bv, _)| max_v < *bv) {
            best = Some((max_v, x.clone()));
        }

        let tight = inner_tol <= cfg.inner.tol;
        if max_v < cfg.outer_tol && (tight || res.stationarity <= cfg.inner.tol) {
            status = AlspgStatus::Converged;
            break;
        }
        if failed || stalled {
            status = if failed {
                AlspgStatus::InnerFailed
            } else {
                AlspgStatus::Stalled
            };
            if let Some((_, bx)) = &best {
                x = bx.clone();
            }
            break;
        }
        if cfg.inner_tol_schedule {
            inner_tol = (inner_tol * 0.1).max(cfg.inner.tol);
        }
    }

    let f_star = f.value(&x);
    counters.n_f += 1;
    let mut reports = Vec::with_capacity(blocks.len());
    for b in &blocks {
        // Report V for the returned point under the final multipliers and the penalty
        // that produced them.
        let g = b.map.value(&x);
        counters.n_g += 1;
        reports.push(BlockReport {
            name: b.name.clone(),
            lambda: b.lambda.clone(),
            rho: b.rho,
            v: (&g - b.set.project(&(&g + &b.lambda / b.rho))?).norm(),
        });
    }
    Ok(AlspgResult {
        x_star: x,
        f_star,
        blocks: reports,
        outer_iterations: outer,
        inner_iterations,
        status,
        counters,
        trace,
    })
}
