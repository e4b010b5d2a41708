//! Scenario files: TOML documents naming a problem, a solver and a seed.
//!
//! ```toml
//! id = "ik_annulus"
//! solver = "alspg"          # alspg | spg | ilqr | alspg-noproj
//! seed = 1
//! repeat = 1                # runs per scenario
//! vary_seed = false         # run k uses seed + k when true
//!
//! [problem]
//! kind = "ik"
//! links = [1.0, 0.8, 0.6]
//! joint_limit = 2.5
//! q0 = [0.1, 0.2, -0.1]
//! target = { kind = "annulus", center = [1.0, 1.0], inner = 0.2, outer = 0.4 }
//!
//! [alspg]                   # optional overrides, same for [ilqr]
//! outer_tol = 1e-4
//! ```

use std::fmt::Write as _;
use std::path::Path;

use alspg_core::alspg::AlspgConfig;
use alspg_core::geometry::{BernsteinCurve2D, ConvexPolygon2D, Point2};
use alspg_core::ocp::IlqrConfig;
use alspg_core::problems::CarModel;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "alspg")]
    Alspg,
    #[serde(rename = "spg")]
    Spg,
    #[serde(rename = "ilqr")]
    Ilqr,
    /// ALSPG on the plain-constraint rewrite of the problem.
    #[serde(rename = "alspg-noproj")]
    AlspgNoProj,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Alspg => "alspg",
            SolverKind::Spg => "spg",
            SolverKind::Ilqr => "ilqr",
            SolverKind::AlspgNoProj => "alspg-noproj",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub solver: SolverKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default)]
    pub vary_seed: bool,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub alspg: AlspgConfig,
    #[serde(default)]
    pub ilqr: IlqrConfig,
}

fn one() -> usize {
    1
}

fn default_samples() -> usize {
    10_000
}

fn default_limit() -> f64 {
    std::f64::consts::PI
}

/// Problem id and parameters. Entries marked optional are drawn from the scene RNG
/// when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Planar-arm inverse kinematics with the end-effector in `target`. Without `q0`
    /// the preferred pose is uniform over the joint limits.
    Ik {
        links: Vec<f64>,
        #[serde(default = "default_limit")]
        joint_limit: f64,
        q0: Option<Vec<f64>>,
        target: SetSpec,
    },
    /// IK under `P(aᵀ f(q) ≤ 0) ≥ eta` with `a ~ N(mean, covariance)`; the record
    /// carries the Monte-Carlo satisfaction rate over `samples` draws of `a`.
    RobustIk {
        links: Vec<f64>,
        #[serde(default = "default_limit")]
        joint_limit: f64,
        q0: Vec<f64>,
        mean: [f64; 2],
        covariance: [[f64; 2]; 2],
        eta: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Floating-base five-link reaching analog. Without `posture` the joints are uniform
    /// on `[−2, 2]` around the upright pose.
    Talos {
        hand: [f64; 2],
        inner: f64,
        outer: f64,
        posture: Option<Vec<f64>>,
    },
    /// Pusher-slider planning. Without `goal` the target pose is drawn with
    /// `x ∈ [0.05, 0.15]`, `y ∈ [−0.1, 0.1]`, `θ ∈ [−π/3, π/3]`.
    Push {
        half_width: f64,
        dt: f64,
        horizon: usize,
        start: [f64; 4],
        goal: Option<[f64; 3]>,
        goal_weight: [f64; 3],
        control_weight: f64,
        velocity_limit: Option<f64>,
    },
    /// Car obstacle avoidance; `random_obstacles` adds generated obstacles along the
    /// segment from start to goal.
    Car {
        model: CarModel,
        dt: f64,
        horizon: usize,
        start: Vec<f64>,
        goal: Vec<f64>,
        robot: Option<ShapeSpec>,
        #[serde(default)]
        obstacles: Vec<ShapeSpec>,
        #[serde(default)]
        random_obstacles: usize,
        goal_weight: Vec<f64>,
        control_weight: f64,
        control_limits: Option<Vec<f64>>,
    },
    /// Unconstrained reach planning for a planar arm under double-integrator joints.
    Reach {
        links: Vec<f64>,
        #[serde(default = "default_limit")]
        joint_limit: f64,
        q_start: Vec<f64>,
        target: [f64; 2],
        horizon: usize,
        duration: f64,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Ik { .. } => "ik",
            ProblemSpec::RobustIk { .. } => "robust_ik",
            ProblemSpec::Talos { .. } => "talos",
            ProblemSpec::Push { .. } => "push",
            ProblemSpec::Car { .. } => "car",
            ProblemSpec::Reach { .. } => "reach",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolygonSide {
    Onto,
    OutOf,
}

/// Target sets for the IK problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Point {
        at: [f64; 2],
    },
    /// `lower ≤ normalᵀp ≤ upper`; either bound may be omitted.
    Slab {
        normal: [f64; 2],
        lower: Option<f64>,
        upper: Option<f64>,
    },
    Annulus {
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    /// `‖W(p − center)‖_∞ ≤ radius` with `W = diag(weights)`.
    Box {
        center: [f64; 2],
        weights: [f64; 2],
        radius: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        side: PolygonSide,
    },
    Curve {
        control_points: Vec<[f64; 2]>,
    },
}

/// Shapes placed in a scene: obstacles, robot footprints and curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Point {
        at: [f64; 2],
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Rectangle {
        center: [f64; 2],
        half_extents: [f64; 2],
        #[serde(default)]
        angle: f64,
    },
    Curve {
        control_points: Vec<[f64; 2]>,
    },
}

pub(crate) fn pt(a: [f64; 2]) -> Point2 {
    Point2::new(a[0], a[1])
}

impl ShapeSpec {
    pub fn polygon(&self) -> Result<Option<ConvexPolygon2D>, HarnessError> {
        let poly = match self {
            ShapeSpec::Polygon { vertices } => ConvexPolygon2D::new(vertices.iter().copied().map(pt).collect()),
            ShapeSpec::Rectangle {
                center,
                half_extents,
                angle,
            } => ConvexPolygon2D::rectangle(pt(*center), half_extents[0], half_extents[1], *angle),
            _ => return Ok(None),
        };
        poly.map(Some).map_err(|e| HarnessError::Parse(format!("bad polygon: {e}")))
    }

    /// The shape as the vertex list that the geometry CSV carries.
    pub fn outline(&self) -> Result<Shape, HarnessError> {
        Ok(match self {
            ShapeSpec::Point { at } => Shape::Point(*at),
            ShapeSpec::Curve { control_points } => {
                BernsteinCurve2D::new(&control_points.iter().copied().map(pt).collect::<Vec<_>>())
                    .map_err(|e| HarnessError::Parse(format!("bad curve: {e}")))?;
                Shape::Curve(control_points.clone())
            }
            _ => Shape::Polygon(
                self.polygon()?
                    .expect("polygonal shape")
                    .vertices()
                    .iter()
                    .map(|v| [v[0], v[1]])
                    .collect(),
            ),
        })
    }
}

/// Scene geometry in vertex-list form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Point([f64; 2]),
    Polygon(Vec<[f64; 2]>),
    /// Bernstein control points.
    Curve(Vec<[f64; 2]>),
}

impl Shape {
    fn kind(&self) -> &'static str {
        match self {
            Shape::Point(_) => "point",
            Shape::Polygon(_) => "polygon",
            Shape::Curve(_) => "curve",
        }
    }

    fn points(&self) -> &[[f64; 2]] {
        match self {
            Shape::Point(p) => std::slice::from_ref(p),
            Shape::Polygon(v) | Shape::Curve(v) => v,
        }
    }

    pub fn to_spec(&self) -> ShapeSpec {
        match self {
            Shape::Point(at) => ShapeSpec::Point { at: *at },
            Shape::Polygon(v) => ShapeSpec::Polygon { vertices: v.clone() },
            Shape::Curve(v) => ShapeSpec::Curve {
                control_points: v.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedShape {
    pub name: String,
    pub shape: Shape,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Parse(m) => HarnessError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn check(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Parse(format!("scenario `{}`: {m}", self.id)));
        if self.id.is_empty() {
            return bad("empty id".into());
        }
        if self.repeat == 0 {
            return bad("repeat must be at least 1".into());
        }
        let ocp = matches!(
            self.problem,
            ProblemSpec::Push { .. } | ProblemSpec::Car { .. } | ProblemSpec::Reach { .. }
        );
        if matches!(self.solver, SolverKind::Ilqr | SolverKind::Spg) && !ocp {
            return bad(format!(
                "solver `{}` needs an optimal control problem, `{}` is not one",
                self.solver.name(),
                self.problem.name()
            ));
        }
        self.alspg
            .validate()
            .or_else(|e| bad(format!("alspg config: {e}")))?;
        Ok(())
    }

    /// Seed of run `k`.
    pub fn run_seed(&self, k: usize) -> u64 {
        if self.vary_seed {
            self.seed.wrapping_add(k as u64)
        } else {
            self.seed
        }
    }
}

/// Geometry CSV: one row per vertex, `shape,kind,index,x,y`.
pub fn write_geometry_csv(shapes: &[NamedShape]) -> String {
    let mut out = String::from("shape,kind,index,x,y\n");
    for s in shapes {
        for (i, p) in s.shape.points().iter().enumerate() {
            let _ = writeln!(out, "{},{},{i},{},{}", s.name, s.shape.kind(), p[0], p[1]);
        }
    }
    out
}

pub fn parse_geometry_csv(text: &str) -> Result<Vec<NamedShape>, HarnessError> {
    let bad = |line: usize, m: &str| HarnessError::Parse(format!("geometry line {line}: {m}"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| bad(1, &e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["shape", "kind", "index", "x", "y"] {
        return Err(bad(1, "expected header shape,kind,index,x,y"));
    }
    let mut shapes: Vec<(String, String, Vec<[f64; 2]>)> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| bad(line, &e.to_string()))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(line, "bad coordinate"));
        let index: usize = rec[2].parse().map_err(|_| bad(line, "bad index"))?;
        let (name, kind) = (&rec[0], &rec[1]);
        let p = [num(3)?, num(4)?];
        match shapes.last_mut() {
            Some((n, k, pts)) if n == name && k == kind && index == pts.len() => pts.push(p),
            _ if index == 0 => shapes.push((name.to_string(), kind.to_string(), vec![p])),
            _ => return Err(bad(line, "vertex index out of sequence")),
        }
    }
    shapes
        .into_iter()
        .map(|(name, kind, pts)| {
            let shape = match kind.as_str() {
                "point" if pts.len() == 1 => Shape::Point(pts[0]),
                "polygon" => Shape::Polygon(pts),
                "curve" => Shape::Curve(pts),
                other => return Err(HarnessError::Parse(format!("shape `{name}`: bad kind `{other}`"))),
            };
            // Validate through the same constructors the scenario parser uses.
            shape.to_spec().outline()?;
            Ok(NamedShape { name, shape })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const IK: &str = r#"
id = "t"
solver = "alspg"
seed = 4

[problem]
kind = "ik"
links = [1.0, 1.0]
target = { kind = "polygon", side = "out_of", vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] }

[alspg]
rho0 = 1.0

[alspg.inner]
tol = 1e-6
"#;

    #[test]
    fn parses_partial_solver_configs() {
        let s = Scenario::parse(IK).unwrap();
        assert_eq!(s.repeat, 1);
        assert_eq!(s.alspg.rho0, 1.0);
        assert_eq!(s.alspg.inner.tol, 1e-6);
        assert_eq!(s.alspg.outer_tol, AlspgConfig::default().outer_tol);
        assert_eq!(s.alspg.inner.max_iter, alspg_core::spg::SpgConfig::default().max_iter);
        assert!(matches!(s.problem, ProblemSpec::Ik { q0: None, .. }));
    }

    #[test]
    fn serialized_scenario_parses_back() {
        let s = Scenario::parse(IK).unwrap();
        assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn rejects_typos_and_bad_values() {
        assert!(Scenario::parse(&IK.replace("rho0", "rh0")).is_err());
        assert!(Scenario::parse(&IK.replace("rho0 = 1.0", "rho0 = -1.0")).is_err());
        assert!(Scenario::parse(&IK.replace("seed = 4", "seed = 4\nrepeat = 0")).is_err());
        let err = Scenario::parse(&IK.replace("\"alspg\"\nseed", "\"newton\"\nseed")).unwrap_err();
        assert!(err.to_string().contains("newton"));
    }

    #[test]
    fn geometry_csv_is_a_fixpoint() {
        let shapes = vec![
            NamedShape {
                name: "box".into(),
                shape: ShapeSpec::Rectangle {
                    center: [1.0, 2.0],
                    half_extents: [0.3, 0.1],
                    angle: 0.7,
                }
                .outline()
                .unwrap(),
            },
            NamedShape {
                name: "path".into(),
                shape: Shape::Curve(vec![[0.0, 0.0], [0.1, 1.0 / 3.0], [2.0, -1e-7]]),
            },
            NamedShape {
                name: "goal".into(),
                shape: Shape::Point([5.0, 0.0]),
            },
        ];
        let text = write_geometry_csv(&shapes);
        let parsed = parse_geometry_csv(&text).unwrap();
        assert_eq!(parsed, shapes);
        assert_eq!(write_geometry_csv(&parsed), text);
    }

    #[test]
    fn geometry_parser_rejects_bad_rows() {
        assert!(parse_geometry_csv("shape,kind,index,x,y\na,polygon,1,0,0\n").is_err());
        assert!(parse_geometry_csv("shape,kind,index,x,y\na,blob,0,0,0\n").is_err());
        // Two vertices do not make a polygon.
        assert!(parse_geometry_csv("shape,kind,index,x,y\na,polygon,0,0,0\na,polygon,1,1,0\n").is_err());
    }
}
