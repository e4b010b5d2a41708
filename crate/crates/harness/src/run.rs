use std::sync::Arc;
use std::time::Instant;

use alspg_core::alspg::{AlspgResult, AlspgStatus, ConstraintBlock};
use alspg_core::geometry::ProjectableSet;
use alspg_core::ocp::{
    ilqr_baseline, shooting_blocks, solve_ocp, RolloutCache, ShootingObjective, ShootingProblem,
};
use alspg_core::problems::{without_projections, without_projections_ocp, ChanceConstraint, PlanarArm};
use alspg_core::spg::{spg_minimize, ObjectiveOracle, SpgResult, SpgStatus};
use nalgebra::{DVector, Vector2};
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::registry::{build, Model};
use crate::scenario::{NamedShape, Scenario, SolverKind};
use crate::HarnessError;

/// One solve. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub run: usize,
    pub problem: String,
    pub solver: String,
    pub seed: u64,
    pub status: String,
    pub converged: bool,
    /// Time spent inside the solve call.
    pub wall_ms: f64,
    pub n_f: usize,
    pub n_grad: usize,
    pub n_g: usize,
    pub n_jac: usize,
    /// Inner (SPG or iLQR) iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub objective: f64,
    /// The solver's own violation measure, `max_i V_i`.
    pub max_v: f64,
    /// `max_i ‖g_i(x) − Π_{C_i}(g_i(x))‖_∞` on the original (projection) constraints.
    pub infeasibility: f64,
    /// `‖x − Π_domain(x)‖_∞`.
    pub domain_violation: f64,
    /// Monte-Carlo chance-constraint satisfaction, robust IK only.
    pub satisfaction: Option<f64>,
}

impl RunRecord {
    /// Serialized record with the wall time zeroed; equal across reruns of the same
    /// scenario and seed.
    pub fn fingerprint(&self) -> String {
        let mut r = self.clone();
        r.wall_ms = 0.0;
        serde_json::to_string(&r).expect("record serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub iter: usize,
    pub cost: f64,
    pub stationarity: f64,
    pub max_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `T + 1` states.
    pub states: Vec<Vec<f64>>,
    /// `T` controls.
    pub controls: Vec<Vec<f64>>,
}

/// A record plus the histories needed for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub record: RunRecord,
    pub solution: Vec<f64>,
    pub convergence: Vec<ConvergenceRow>,
    pub trajectory: Option<Trajectory>,
    pub geometry: Vec<NamedShape>,
}

/// Solver-agnostic outcome of one solve.
struct Outcome {
    x: DVector<f64>,
    f: f64,
    status: String,
    converged: bool,
    counters: alspg_core::spg::EvalCounters,
    iterations: usize,
    outer_iterations: usize,
    max_v: f64,
    convergence: Vec<ConvergenceRow>,
}

fn spg_status(s: SpgStatus) -> &'static str {
    match s {
        SpgStatus::Converged => "converged",
        SpgStatus::MaxIter => "max_iter",
        SpgStatus::LineSearchFailed => "line_search_failed",
    }
}

fn from_spg(res: SpgResult) -> Outcome {
    Outcome {
        convergence: res
            .history
            .iter()
            .map(|h| ConvergenceRow {
                iter: h.iter,
                cost: h.f,
                stationarity: h.stationarity,
                max_v: 0.0,
            })
            .collect(),
        converged: res.status == SpgStatus::Converged,
        status: spg_status(res.status).into(),
        x: res.x_star,
        f: res.f_star,
        counters: res.counters,
        iterations: res.iterations,
        outer_iterations: 0,
        max_v: 0.0,
    }
}

fn from_alspg(res: AlspgResult) -> Outcome {
    let status = match res.status {
        AlspgStatus::Converged => "converged",
        AlspgStatus::MaxOuter => "max_outer",
        AlspgStatus::InnerFailed => "inner_failed",
        AlspgStatus::Stalled => "stalled",
    };
    Outcome {
        convergence: res
            .trace
            .iter()
            .enumerate()
            .map(|(k, t)| ConvergenceRow {
                iter: k,
                cost: t.merit,
                stationarity: t.inner_stationarity,
                max_v: t.max_v,
            })
            .collect(),
        converged: res.status == AlspgStatus::Converged,
        status: status.into(),
        max_v: res.max_v(),
        x: res.x_star,
        f: res.f_star,
        counters: res.counters,
        iterations: res.inner_iterations,
        outer_iterations: res.outer_iterations,
    }
}

fn solver_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Solver(e.to_string())
}

/// Plain SPG on the reduced objective, keeping the per-iteration history.
fn spg_ocp(prob: &ShootingProblem, u0: &DVector<f64>, scenario: &Scenario) -> Result<Outcome, HarnessError> {
    let mut objective = ShootingObjective::new(prob);
    let mut oracle = ObjectiveOracle::new(&mut objective);
    let res = spg_minimize(&mut oracle, prob.control_domain.as_ref(), u0, &scenario.alspg.inner).map_err(solver_err)?;
    Ok(from_spg(res))
}

fn alspg_ocp(prob: &ShootingProblem, u0: &DVector<f64>, scenario: &Scenario) -> Result<Outcome, HarnessError> {
    if prob.constraints.is_empty() {
        // Identical to the solver's own unconstrained dispatch, but the history is kept.
        let mut o = spg_ocp(prob, u0, scenario)?;
        o.outer_iterations = 1;
        return Ok(o);
    }
    Ok(from_alspg(solve_ocp(prob, u0, &scenario.alspg).map_err(solver_err)?))
}

fn block_infeasibility(blocks: &[ConstraintBlock], x: &DVector<f64>) -> Result<f64, HarnessError> {
    let mut worst: f64 = 0.0;
    for b in blocks {
        let g = b.map.value(x);
        let p = b.set.project(&g).map_err(solver_err)?;
        worst = worst.max((g - p).amax());
    }
    Ok(worst)
}

fn domain_violation(domain: &dyn ProjectableSet, x: &DVector<f64>) -> Result<f64, HarnessError> {
    Ok((x - domain.project(x).map_err(solver_err)?).amax())
}

/// Fraction of sampled normals `a` with `aᵀ f(q) ≤ 0`.
pub fn satisfaction_rate(arm: &PlanarArm, cc: &ChanceConstraint, q: &DVector<f64>, samples: usize, seed: u64) -> f64 {
    let (p, _) = arm.fk(q);
    let sqrt = cc.covariance_sqrt().expect("validated when the problem was built");
    let mut rng = SplitMix64::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let z = Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            (cc.mean + sqrt * z).dot(&p) <= 0.0
        })
        .count();
    hits as f64 / samples as f64
}

fn check_ilqr(prob: &ShootingProblem) -> Result<(), HarnessError> {
    if !prob.constraints.is_empty() || prob.control_domain.dim().is_some() {
        return Err(HarnessError::Parse(
            "the ilqr baseline handles only problems without constraints or control bounds".into(),
        ));
    }
    Ok(())
}

pub fn run_once(scenario: &Scenario, run: usize) -> Result<RunOutput, HarnessError> {
    let seed = scenario.run_seed(run);
    let inst = build(&scenario.problem, seed)?;
    let solver = scenario.solver;

    let (outcome, wall, infeasibility, domain_violation, trajectory) = match &inst.model {
        Model::Static(prob) => {
            let variant = match solver {
                SolverKind::Alspg => None,
                SolverKind::AlspgNoProj => Some(without_projections(prob).map_err(|e| HarnessError::Parse(e.to_string()))?),
                SolverKind::Spg | SolverKind::Ilqr => unreachable!("rejected when parsing"),
            };
            let target = variant.as_ref().unwrap_or(prob);
            let t0 = Instant::now();
            let res = target.solve(&scenario.alspg).map_err(solver_err)?;
            let wall = t0.elapsed();
            let o = from_alspg(res);
            let inf = block_infeasibility(&prob.blocks, &o.x)?;
            let dv = domain_violation(prob.domain.as_ref(), &o.x)?;
            (o, wall, inf, dv, None)
        }
        Model::Ocp { problem, u0 } => {
            let variant = match solver {
                SolverKind::AlspgNoProj => {
                    Some(without_projections_ocp(problem).map_err(|e| HarnessError::Parse(e.to_string()))?)
                }
                SolverKind::Spg if !problem.constraints.is_empty() => {
                    return Err(HarnessError::Parse(
                        "solver `spg` needs a problem without trajectory constraints".into(),
                    ))
                }
                SolverKind::Ilqr => {
                    check_ilqr(problem)?;
                    None
                }
                _ => None,
            };
            let target = variant.as_ref().unwrap_or(problem);
            let t0 = Instant::now();
            let o = match solver {
                SolverKind::Alspg | SolverKind::AlspgNoProj => alspg_ocp(target, u0, scenario)?,
                SolverKind::Spg => spg_ocp(target, u0, scenario)?,
                SolverKind::Ilqr => from_spg(ilqr_baseline(target, u0, &scenario.ilqr).map_err(solver_err)?),
            };
            let wall = t0.elapsed();
            let blocks = shooting_blocks(problem, &Arc::new(RolloutCache::default()));
            let inf = block_infeasibility(&blocks, &o.x)?;
            let dv = domain_violation(problem.control_domain.as_ref(), &o.x)?;
            let traj = problem.rollout(&o.x).map_err(solver_err)?;
            let n = problem.control_dim();
            let trajectory = Trajectory {
                states: traj.states().iter().map(|s| s.iter().copied().collect()).collect(),
                controls: o.x.as_slice().chunks(n).map(|c| c.to_vec()).collect(),
            };
            (o, wall, inf, dv, Some(trajectory))
        }
    };

    let satisfaction = inst
        .chance
        .as_ref()
        .map(|(arm, cc, samples)| satisfaction_rate(arm, cc, &outcome.x, *samples, seed ^ 0x9e37_79b9_7f4a_7c15));

    let record = RunRecord {
        scenario: scenario.id.clone(),
        run,
        problem: scenario.problem.name().into(),
        solver: solver.name().into(),
        seed,
        status: outcome.status,
        converged: outcome.converged,
        wall_ms: wall.as_secs_f64() * 1e3,
        n_f: outcome.counters.n_f,
        n_grad: outcome.counters.n_grad,
        n_g: outcome.counters.n_g,
        n_jac: outcome.counters.n_jac,
        iterations: outcome.iterations,
        outer_iterations: outcome.outer_iterations,
        objective: outcome.f,
        max_v: outcome.max_v,
        infeasibility,
        domain_violation,
        satisfaction,
    };
    Ok(RunOutput {
        record,
        solution: outcome.x.iter().copied().collect(),
        convergence: outcome.convergence,
        trajectory,
        geometry: inst.geometry,
    })
}

/// All `repeat` runs of a scenario, in run order.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<RunOutput>, HarnessError> {
    (0..scenario.repeat).map(|k| run_once(scenario, k)).collect()
}

/// CSV of the records with a header row.
pub fn records_csv(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}
