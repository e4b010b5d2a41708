use std::fmt::Write as _;
use std::str::FromStr;

use crate::run::RunOutput;
use crate::scenario::write_geometry_csv;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Convergence,
    Trajectory,
    Geometry,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "convergence" => Ok(PlotKind::Convergence),
            "trajectory" => Ok(PlotKind::Trajectory),
            "geometry" => Ok(PlotKind::Geometry),
            other => Err(format!("unknown plot kind `{other}` (convergence | trajectory | geometry)")),
        }
    }
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Convergence => "convergence",
            PlotKind::Trajectory => "trajectory",
            PlotKind::Geometry => "geometry",
        }
    }
}

/// CSV text for one plot of one run.
///
/// * convergence: `iter,cost,stationarity,max_v`. For SPG and iLQR one row per
///   iteration with `max_v = 0`; for constrained ALSPG one row per outer iteration
///   holding the merit value, the subproblem stationarity and the violation.
/// * trajectory: `t,x0…,u0…` for `t = 0..=T`, controls empty on the last row.
/// * geometry: `shape,kind,index,x,y`, one row per vertex.
pub fn emit_plotdata(out: &RunOutput, kind: PlotKind) -> Result<String, HarnessError> {
    let missing = || HarnessError::MissingHistory(format!("run {} of `{}` has no {} data", out.record.run, out.record.scenario, kind.name()));
    match kind {
        PlotKind::Convergence => {
            if out.convergence.is_empty() {
                return Err(missing());
            }
            let mut s = String::from("iter,cost,stationarity,max_v\n");
            for r in &out.convergence {
                let _ = writeln!(s, "{},{},{},{}", r.iter, r.cost, r.stationarity, r.max_v);
            }
            Ok(s)
        }
        PlotKind::Trajectory => {
            let traj = out.trajectory.as_ref().ok_or_else(missing)?;
            let m = traj.states.first().map_or(0, Vec::len);
            let n = traj.controls.first().map_or(0, Vec::len);
            let mut header = vec!["t".to_string()];
            header.extend((0..m).map(|i| format!("x{i}")));
            header.extend((0..n).map(|j| format!("u{j}")));
            let mut s = header.join(",") + "\n";
            for (t, x) in traj.states.iter().enumerate() {
                let mut row = vec![t.to_string()];
                row.extend(x.iter().map(f64::to_string));
                match traj.controls.get(t) {
                    Some(u) => row.extend(u.iter().map(f64::to_string)),
                    None => row.extend(std::iter::repeat_n(String::new(), n)),
                }
                s += &(row.join(",") + "\n");
            }
            Ok(s)
        }
        PlotKind::Geometry => {
            if out.geometry.is_empty() {
                return Err(missing());
            }
            Ok(write_geometry_csv(&out.geometry))
        }
    }
}
