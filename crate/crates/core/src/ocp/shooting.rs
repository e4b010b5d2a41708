use std::io;
use std::sync::{Arc, Mutex};

use nalgebra::DVector;

use super::{DynamicsModel, OcpError, StageCost};
use crate::alspg::{alspg_solve, AlspgConfig, AlspgResult, AlspgStatus, ConstraintBlock, ConstraintMap};
use crate::geometry::{ProjectableSet, ReplicatedSet, SingletonSet, WholeSpace};
use crate::spg::{spg_minimize, EvalCounters, Objective, ObjectiveOracle, SpgStatus};

/// States `x_0, x_1, …, x_T` of one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    states: Vec<DVector<f64>>,
}

impl StateTrajectory {
    pub(crate) fn from_states(states: Vec<DVector<f64>>) -> Self {
        assert!(!states.is_empty(), "trajectory needs x_0");
        Self { states }
    }

    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// `x_t` for `t ∈ 0..=T`.
    pub fn state(&self, t: usize) -> &DVector<f64> {
        &self.states[t]
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds x_0")
    }

    /// `[x_1; …; x_T]`, excluding the fixed initial state.
    pub fn flat(&self) -> DVector<f64> {
        let m = self.states[0].len();
        let mut out = DVector::zeros(self.horizon() * m);
        for (t, x) in self.states[1..].iter().enumerate() {
            out.rows_mut(t * m, m).copy_from(x);
        }
        out
    }
}

fn horizon_of(dynamics: &dyn DynamicsModel, u: &DVector<f64>) -> Result<usize, OcpError> {
    let n = dynamics.control_dim();
    if n == 0 || u.len() % n != 0 {
        return Err(OcpError::DimensionMismatch {
            what: "control trajectory",
            expected: n,
            got: u.len(),
        });
    }
    Ok(u.len() / n)
}

/// Forward simulation `x_{t+1} = f_t(x_t, u_t)` for `t = 0, …, T−1`, with `T` implied by
/// the length of `u`.
pub fn rollout(
    dynamics: &dyn DynamicsModel,
    x0: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<StateTrajectory, OcpError> {
    let m = dynamics.state_dim();
    let n = dynamics.control_dim();
    if x0.len() != m {
        return Err(OcpError::DimensionMismatch {
            what: "initial state",
            expected: m,
            got: x0.len(),
        });
    }
    let horizon = horizon_of(dynamics, u)?;
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    for t in 0..horizon {
        let ut = u.rows(t * n, n).into_owned();
        let next = dynamics.step(t, &states[t], &ut);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(OcpError::NonFiniteState { t: t + 1 });
        }
        states.push(next);
    }
    Ok(StateTrajectory { states })
}

/// `∇_u F(x_0, u)ᵀ y` by one backward sweep, where `F` stacks `x_1, …, x_T` and `y` is
/// partitioned the same way. Only the running costate is kept between steps.
pub fn adjoint_vjp(
    dynamics: &dyn DynamicsModel,
    traj: &StateTrajectory,
    u: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>, OcpError> {
    let m = dynamics.state_dim();
    let n = dynamics.control_dim();
    let horizon = traj.horizon();
    if u.len() != horizon * n {
        return Err(OcpError::DimensionMismatch {
            what: "control trajectory",
            expected: horizon * n,
            got: u.len(),
        });
    }
    if y.len() != horizon * m {
        return Err(OcpError::DimensionMismatch {
            what: "state cotangent",
            expected: horizon * m,
            got: y.len(),
        });
    }
    let mut z = DVector::zeros(horizon * n);
    if horizon == 0 {
        return Ok(z);
    }
    // costate of x_{t+1}, i.e. the sensitivity of yᵀF to x_{t+1}
    let mut costate = y.rows((horizon - 1) * m, m).into_owned();
    for t in (0..horizon).rev() {
        let ut = u.rows(t * n, n).into_owned();
        let (ax, bu) = dynamics.step_vjp(t, traj.state(t), &ut, &costate);
        z.rows_mut(t * n, n).copy_from(&bu);
        if t > 0 {
            costate = ax + y.rows((t - 1) * m, m);
        }
    }
    Ok(z)
}

pub fn trajectory_cost(cost: &dyn StageCost, traj: &StateTrajectory, u: &DVector<f64>) -> f64 {
    let horizon = traj.horizon();
    if horizon == 0 {
        return 0.0;
    }
    let n = u.len() / horizon;
    let mut total = 0.0;
    for t in 0..horizon {
        total += cost.control_cost(t, &u.rows(t * n, n).into_owned());
        total += cost.state_cost(t + 1, horizon, traj.state(t + 1));
    }
    total
}

/// `(∇_x c, ∇_u c)` with the state part laid out like [`StateTrajectory::flat`].
pub fn cost_gradients(
    cost: &dyn StageCost,
    traj: &StateTrajectory,
    u: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let horizon = traj.horizon();
    let m = traj.state(0).len();
    let n = if horizon == 0 { 0 } else { u.len() / horizon };
    let mut gx = DVector::zeros(horizon * m);
    let mut gu = DVector::zeros(horizon * n);
    for t in 0..horizon {
        gu.rows_mut(t * n, n)
            .copy_from(&cost.control_grad(t, &u.rows(t * n, n).into_owned()));
        gx.rows_mut(t * m, m)
            .copy_from(&cost.state_grad(t + 1, horizon, traj.state(t + 1)));
    }
    (gx, gu)
}

/// A function `h(F(x_0, u), u)` of a whole trajectory.
pub trait TrajectoryMap: Send + Sync {
    fn output_dim(&self) -> usize;

    fn value(&self, traj: &StateTrajectory, u: &DVector<f64>) -> DVector<f64>;

    /// Returns `(∂h/∂x)ᵀr` laid out like [`StateTrajectory::flat`] and `(∂h/∂u)ᵀr` when
    /// `h` depends on the controls directly.
    fn vjp(
        &self,
        traj: &StateTrajectory,
        u: &DVector<f64>,
        r: &DVector<f64>,
    ) -> (DVector<f64>, Option<DVector<f64>>);
}

/// Picks coordinates `indices` of the states at the listed timesteps (`1..=T`) and
/// stacks them in timestep order.
#[derive(Debug, Clone)]
pub struct StateSelection {
    pub state_dim: usize,
    pub horizon: usize,
    pub indices: Vec<usize>,
    pub timesteps: Vec<usize>,
}

impl TrajectoryMap for StateSelection {
    fn output_dim(&self) -> usize {
        self.indices.len() * self.timesteps.len()
    }

    fn value(&self, traj: &StateTrajectory, _u: &DVector<f64>) -> DVector<f64> {
        let d = self.indices.len();
        let mut out = DVector::zeros(self.output_dim());
        for (k, &t) in self.timesteps.iter().enumerate() {
            let x = traj.state(t);
            for (j, &i) in self.indices.iter().enumerate() {
                out[k * d + j] = x[i];
            }
        }
        out
    }

    fn vjp(
        &self,
        _traj: &StateTrajectory,
        _u: &DVector<f64>,
        r: &DVector<f64>,
    ) -> (DVector<f64>, Option<DVector<f64>>) {
        let d = self.indices.len();
        let m = self.state_dim;
        let mut y = DVector::zeros(self.horizon * m);
        for (k, &t) in self.timesteps.iter().enumerate() {
            for (j, &i) in self.indices.iter().enumerate() {
                y[(t - 1) * m + i] += r[k * d + j];
            }
        }
        (y, None)
    }
}

/// Trajectory constraint `h(F(x_0, u), u) ∈ C`.
#[derive(Clone)]
pub struct TrajectoryConstraint {
    pub name: String,
    pub map: Arc<dyn TrajectoryMap>,
    pub set: Arc<dyn ProjectableSet>,
}

impl std::fmt::Debug for TrajectoryConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrajectoryConstraint")
            .field("name", &self.name)
            .field("set", &self.set)
            .finish()
    }
}

/// `min_{u ∈ C_u} c(F(x_0, u), u)` subject to trajectory constraints.
#[derive(Clone)]
pub struct ShootingProblem {
    pub dynamics: Arc<dyn DynamicsModel>,
    pub cost: Arc<dyn StageCost>,
    pub x0: DVector<f64>,
    pub horizon: usize,
    pub control_domain: Arc<dyn ProjectableSet>,
    pub constraints: Vec<TrajectoryConstraint>,
}

impl std::fmt::Debug for ShootingProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShootingProblem")
            .field("dynamics", &self.dynamics)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("control_domain", &self.control_domain)
            .field("constraints", &self.constraints)
            .finish()
    }
}

impl ShootingProblem {
    pub fn new(
        dynamics: Arc<dyn DynamicsModel>,
        cost: Arc<dyn StageCost>,
        x0: DVector<f64>,
        horizon: usize,
    ) -> Result<Self, OcpError> {
        if x0.len() != dynamics.state_dim() {
            return Err(OcpError::DimensionMismatch {
                what: "initial state",
                expected: dynamics.state_dim(),
                got: x0.len(),
            });
        }
        if horizon == 0 {
            return Err(OcpError::InvalidProblem("horizon must be positive".into()));
        }
        Ok(Self {
            dynamics,
            cost,
            x0,
            horizon,
            control_domain: Arc::new(WholeSpace),
            constraints: Vec::new(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.dynamics.control_dim()
    }

    /// Number of decision variables `T·n`.
    pub fn num_controls(&self) -> usize {
        self.horizon * self.control_dim()
    }

    pub fn with_control_domain(mut self, domain: Arc<dyn ProjectableSet>) -> Result<Self, OcpError> {
        if let Some(d) = domain.dim() {
            if d != self.num_controls() {
                return Err(OcpError::DimensionMismatch {
                    what: "control domain",
                    expected: self.num_controls(),
                    got: d,
                });
            }
        }
        self.control_domain = domain;
        Ok(self)
    }

    /// The same per-step control set at every timestep.
    pub fn with_control_set_per_step(self, set: Arc<dyn ProjectableSet>) -> Result<Self, OcpError> {
        let n = self.control_dim();
        let horizon = self.horizon;
        self.with_control_domain(Arc::new(ReplicatedSet::new(set, n, horizon)?))
    }

    /// Requires `x_t[indices] ∈ set` at every listed timestep (`1..=T`).
    pub fn add_state_set(
        &mut self,
        name: impl Into<String>,
        indices: Vec<usize>,
        timesteps: Vec<usize>,
        set: Arc<dyn ProjectableSet>,
    ) -> Result<(), OcpError> {
        let m = self.state_dim();
        if indices.is_empty() || indices.iter().any(|&i| i >= m) {
            return Err(OcpError::InvalidProblem(format!("state indices {indices:?} out of range")));
        }
        if timesteps.is_empty() || timesteps.iter().any(|&t| t == 0 || t > self.horizon) {
            return Err(OcpError::InvalidProblem(format!(
                "timesteps must lie in 1..={}",
                self.horizon
            )));
        }
        let d = indices.len();
        let copies = timesteps.len();
        let replicated = ReplicatedSet::new(set, d, copies)?;
        self.constraints.push(TrajectoryConstraint {
            name: name.into(),
            map: Arc::new(StateSelection {
                state_dim: m,
                horizon: self.horizon,
                indices,
                timesteps,
            }),
            set: Arc::new(replicated),
        });
        Ok(())
    }

    /// Equality `h(F(x_0, u), u) = 0`, handled as membership in `{0}`.
    pub fn add_equality(&mut self, name: impl Into<String>, map: Arc<dyn TrajectoryMap>) {
        let k = map.output_dim();
        self.constraints.push(TrajectoryConstraint {
            name: name.into(),
            map,
            set: Arc::new(SingletonSet::zeros(k)),
        });
    }

    pub fn rollout(&self, u: &DVector<f64>) -> Result<StateTrajectory, OcpError> {
        self.check_controls(u)?;
        rollout(self.dynamics.as_ref(), &self.x0, u)
    }

    fn check_controls(&self, u: &DVector<f64>) -> Result<(), OcpError> {
        if u.len() != self.num_controls() {
            return Err(OcpError::DimensionMismatch {
                what: "control trajectory",
                expected: self.num_controls(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

/// `(c(F(x_0, u), u), ∇_u c)` via one rollout and one backward sweep.
pub fn reduced_objective(prob: &ShootingProblem, u: &DVector<f64>) -> Result<(f64, DVector<f64>), OcpError> {
    let traj = prob.rollout(u)?;
    let value = trajectory_cost(prob.cost.as_ref(), &traj, u);
    let (gx, gu) = cost_gradients(prob.cost.as_ref(), &traj, u);
    let grad = gu + adjoint_vjp(prob.dynamics.as_ref(), &traj, u, &gx)?;
    Ok((value, grad))
}

/// Single-entry memo of the latest rollout, shared by the objective and the
/// constraint blocks of one solve.
#[derive(Debug, Default)]
pub struct RolloutCache {
    last: Mutex<Option<(DVector<f64>, Arc<StateTrajectory>)>>,
}

impl RolloutCache {
    pub fn get(
        &self,
        dynamics: &dyn DynamicsModel,
        x0: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<Arc<StateTrajectory>, OcpError> {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((cu, traj)) = last.as_ref() {
            if cu == u {
                return Ok(Arc::clone(traj));
            }
        }
        let traj = Arc::new(rollout(dynamics, x0, u)?);
        *last = Some((u.clone(), Arc::clone(&traj)));
        Ok(traj)
    }
}

/// The reduced objective `u ↦ c(F(x_0, u), u)` as an [`Objective`]. Each gradient
/// costs one backward sweep, tallied as a Jacobian product.
pub struct ShootingObjective<'a> {
    problem: &'a ShootingProblem,
    cache: Arc<RolloutCache>,
    sweeps: usize,
}

impl<'a> ShootingObjective<'a> {
    pub fn new(problem: &'a ShootingProblem) -> Self {
        Self::with_cache(problem, Arc::new(RolloutCache::default()))
    }

    pub fn with_cache(problem: &'a ShootingProblem, cache: Arc<RolloutCache>) -> Self {
        Self {
            problem,
            cache,
            sweeps: 0,
        }
    }
}

impl Objective for ShootingObjective<'_> {
    fn dim(&self) -> usize {
        self.problem.num_controls()
    }

    fn value(&mut self, u: &DVector<f64>) -> f64 {
        let p = self.problem;
        match self.cache.get(p.dynamics.as_ref(), &p.x0, u) {
            Ok(traj) => trajectory_cost(p.cost.as_ref(), &traj, u),
            Err(_) => f64::INFINITY,
        }
    }

    fn gradient(&mut self, u: &DVector<f64>) -> DVector<f64> {
        let p = self.problem;
        let nan = || DVector::from_element(u.len(), f64::NAN);
        let Ok(traj) = self.cache.get(p.dynamics.as_ref(), &p.x0, u) else {
            return nan();
        };
        let (gx, gu) = cost_gradients(p.cost.as_ref(), &traj, u);
        self.sweeps += 1;
        match adjoint_vjp(p.dynamics.as_ref(), &traj, u, &gx) {
            Ok(z) => gu + z,
            Err(_) => nan(),
        }
    }

    fn work(&self) -> EvalCounters {
        EvalCounters {
            n_jac: self.sweeps,
            ..EvalCounters::default()
        }
    }
}

/// `u ↦ h(F(x_0, u), u)` as a [`ConstraintMap`], with the vector-Jacobian product
/// routed through [`adjoint_vjp`].
pub struct ShootingConstraintMap {
    dynamics: Arc<dyn DynamicsModel>,
    x0: DVector<f64>,
    num_controls: usize,
    map: Arc<dyn TrajectoryMap>,
    cache: Arc<RolloutCache>,
}

impl ShootingConstraintMap {
    pub fn new(problem: &ShootingProblem, map: Arc<dyn TrajectoryMap>, cache: Arc<RolloutCache>) -> Self {
        Self {
            dynamics: Arc::clone(&problem.dynamics),
            x0: problem.x0.clone(),
            num_controls: problem.num_controls(),
            map,
            cache,
        }
    }
}

impl ConstraintMap for ShootingConstraintMap {
    fn input_dim(&self) -> usize {
        self.num_controls
    }

    fn output_dim(&self) -> usize {
        self.map.output_dim()
    }

    fn value(&self, u: &DVector<f64>) -> DVector<f64> {
        match self.cache.get(self.dynamics.as_ref(), &self.x0, u) {
            Ok(traj) => self.map.value(&traj, u),
            Err(_) => DVector::from_element(self.output_dim(), f64::NAN),
        }
    }

    fn vjp(&self, u: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let nan = || DVector::from_element(u.len(), f64::NAN);
        let Ok(traj) = self.cache.get(self.dynamics.as_ref(), &self.x0, u) else {
            return nan();
        };
        let (y, direct) = self.map.vjp(&traj, u, r);
        match adjoint_vjp(self.dynamics.as_ref(), &traj, u, &y) {
            Ok(z) => match direct {
                Some(d) => z + d,
                None => z,
            },
            Err(_) => nan(),
        }
    }
}

/// Constraint blocks for every trajectory constraint of `prob`, sharing `cache`.
pub fn shooting_blocks(prob: &ShootingProblem, cache: &Arc<RolloutCache>) -> Vec<ConstraintBlock> {
    prob.constraints
        .iter()
        .map(|c| {
            ConstraintBlock::new(
                c.name.clone(),
                Arc::new(ShootingConstraintMap::new(prob, Arc::clone(&c.map), Arc::clone(cache))),
                Arc::clone(&c.set),
            )
        })
        .collect()
}

/// Solves the shooting problem with the augmented Lagrangian method over the control
/// domain, or with a single SPG run when it has no trajectory constraints.
pub fn solve_ocp(prob: &ShootingProblem, u0: &DVector<f64>, cfg: &AlspgConfig) -> Result<AlspgResult, OcpError> {
    prob.check_controls(u0)?;
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(OcpError::InvalidProblem("initial controls must be finite".into()));
    }
    let cache = Arc::new(RolloutCache::default());
    let mut objective = ShootingObjective::with_cache(prob, Arc::clone(&cache));
    if prob.constraints.is_empty() {
        let mut oracle = ObjectiveOracle::new(&mut objective);
        let res = spg_minimize(&mut oracle, prob.control_domain.as_ref(), u0, &cfg.inner)?;
        let status = match res.status {
            SpgStatus::Converged => AlspgStatus::Converged,
            SpgStatus::MaxIter => AlspgStatus::MaxOuter,
            SpgStatus::LineSearchFailed => AlspgStatus::InnerFailed,
        };
        return Ok(AlspgResult {
            x_star: res.x_star,
            f_star: res.f_star,
            blocks: Vec::new(),
            outer_iterations: 1,
            inner_iterations: res.iterations,
            status,
            counters: res.counters,
            trace: Vec::new(),
        });
    }
    let blocks = shooting_blocks(prob, &cache);
    Ok(alspg_solve(&mut objective, prob.control_domain.as_ref(), &blocks, u0, cfg)?)
}

/// Writes `t, x_0…x_{m−1}, u_0…u_{n−1}` rows for `t = 0..=T`; the final row has empty
/// control cells.
pub fn write_trajectory_csv<W: io::Write>(
    traj: &StateTrajectory,
    u: &DVector<f64>,
    writer: W,
) -> csv::Result<()> {
    let horizon = traj.horizon();
    let m = traj.state(0).len();
    let n = if horizon == 0 { 0 } else { u.len() / horizon };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((0..m).map(|i| format!("x{i}")));
    header.extend((0..n).map(|j| format!("u{j}")));
    w.write_record(&header)?;
    for t in 0..=horizon {
        let mut row = vec![t.to_string()];
        row.extend(traj.state(t).iter().map(|v| v.to_string()));
        for j in 0..n {
            row.push(if t < horizon {
                u[t * n + j].to_string()
            } else {
                String::new()
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
