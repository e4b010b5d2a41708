use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;

use crate::run::{run_scenario, RunOutput};
use crate::scenario::Scenario;
use crate::HarnessError;

/// Scenario files (`*.scenario`) under `dir`, recursively, in path order. With a
/// filter only files whose path relative to `dir` or whose id matches are kept.
pub fn collect_scenarios(dir: &Path, filter: Option<&Regex>) -> Result<Vec<(PathBuf, Scenario)>, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::Usage(format!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| HarnessError::Usage(e.to_string()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|e| e != "scenario") {
            continue;
        }
        let scenario = Scenario::load(path)?;
        let rel = path.strip_prefix(dir).unwrap_or(path).to_string_lossy().into_owned();
        if filter.is_none_or(|re| re.is_match(&rel) || re.is_match(&scenario.id)) {
            out.push((path.to_path_buf(), scenario));
        }
    }
    if out.is_empty() {
        return Err(HarnessError::Usage(format!("no scenarios matched under {}", dir.display())));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub solver: String,
    pub runs: usize,
    pub converged: usize,
    pub wall_ms_mean: f64,
    pub wall_ms_std: f64,
    pub n_f_mean: f64,
    pub n_f_std: f64,
    pub n_grad_mean: f64,
    pub n_grad_std: f64,
    pub n_jac_mean: f64,
    pub n_jac_std: f64,
    pub objective_mean: f64,
    pub objective_std: f64,
    pub objective_median: f64,
    pub max_v_max: f64,
}

pub struct SuiteResult {
    /// Outputs per scenario, in scenario path order.
    pub scenarios: Vec<(Scenario, Vec<RunOutput>)>,
    pub summary: Vec<SummaryRow>,
}

impl SuiteResult {
    pub fn outputs(&self) -> impl Iterator<Item = &RunOutput> {
        self.scenarios.iter().flat_map(|(_, o)| o.iter())
    }

    pub fn row(&self, problem: &str, solver: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.problem == problem && r.solver == solver)
    }
}

/// Sample mean and standard deviation (`n − 1` denominator, zero for one sample).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

pub fn summarize<'a>(outputs: impl Iterator<Item = &'a RunOutput>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String), Vec<&RunOutput>> = BTreeMap::new();
    for o in outputs {
        groups
            .entry((o.record.problem.clone(), o.record.solver.clone()))
            .or_default()
            .push(o);
    }
    groups
        .into_iter()
        .map(|((problem, solver), runs)| {
            let col = |f: &dyn Fn(&RunOutput) -> f64| runs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let wall = mean_std(&col(&|r| r.record.wall_ms));
            let nf = mean_std(&col(&|r| r.record.n_f as f64));
            let ng = mean_std(&col(&|r| r.record.n_grad as f64));
            let nj = mean_std(&col(&|r| r.record.n_jac as f64));
            let obj = col(&|r| r.record.objective);
            let (om, os) = mean_std(&obj);
            SummaryRow {
                problem,
                solver,
                runs: runs.len(),
                converged: runs.iter().filter(|r| r.record.converged).count(),
                wall_ms_mean: wall.0,
                wall_ms_std: wall.1,
                n_f_mean: nf.0,
                n_f_std: nf.1,
                n_grad_mean: ng.0,
                n_grad_std: ng.1,
                n_jac_mean: nj.0,
                n_jac_std: nj.1,
                objective_mean: om,
                objective_std: os,
                objective_median: median(&obj),
                max_v_max: runs.iter().map(|r| r.record.max_v).fold(0.0, f64::max),
            }
        })
        .collect()
}

/// Runs every scenario on up to `jobs` worker threads; results come back in
/// scenario order regardless of completion order.
pub fn run_suite(scenarios: Vec<(PathBuf, Scenario)>, jobs: usize) -> Result<SuiteResult, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    let results: Vec<Result<(Scenario, Vec<RunOutput>), HarnessError>> = pool.install(|| {
        scenarios
            .into_par_iter()
            .map(|(_, s)| run_scenario(&s).map(|o| (s, o)))
            .collect()
    });
    let scenarios = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(scenarios.iter().flat_map(|(_, o)| o.iter()));
    Ok(SuiteResult { scenarios, summary })
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

/// Aligned text table, one row per (problem, solver), values as `mean ± std`.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let header = ["problem", "solver", "conv", "time [ms]", "n_f", "n_grad", "n_jac", "objective"];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.problem.clone(),
                r.solver.clone(),
                format!("{}/{}", r.converged, r.runs),
                format!("{:.1} ± {:.1}", r.wall_ms_mean, r.wall_ms_std),
                format!("{:.1} ± {:.1}", r.n_f_mean, r.n_f_std),
                format!("{:.1} ± {:.1}", r.n_grad_mean, r.n_grad_std),
                format!("{:.1} ± {:.1}", r.n_jac_mean, r.n_jac_std),
                format!("{:.4e} ± {:.1e}", r.objective_mean, r.objective_std),
            ]
        })
        .collect();
    let mut width = header.map(|h| h.chars().count());
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&mut out, &header.map(String::from));
    line(&mut out, &width.map(|w| "-".repeat(w)));
    for row in &body {
        line(&mut out, row);
    }
    out
}
