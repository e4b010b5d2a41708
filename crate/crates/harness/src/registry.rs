//! Problem instances built from scenario specs.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
use std::sync::Arc;

use alspg_core::geometry::{
    c_obstacle, AffineSlabSet, BernsteinCurve2D, BoxSet, ConvexPolygon2D, Footprint, PolygonMode, PolygonSet,
    ProjectableSet, QuadricAnnulusSet, SingletonSet,
};
use alspg_core::problems::{
    car_obstacle_problem, ik_problem, push_problem, reach_problem, robust_ik_problem, talos_analog, CarScene,
    ChanceConstraint, ConstrainedProblem, PlanarArm, PushScene, PusherSlider, TalosScene,
};
use alspg_core::ocp::ShootingProblem;
use nalgebra::{DVector, Matrix2, Vector2};

use crate::rng::SceneRng;
use crate::scenario::{pt, NamedShape, PolygonSide, ProblemSpec, SetSpec, Shape, ShapeSpec};
use crate::HarnessError;

pub enum Model {
    Static(ConstrainedProblem),
    Ocp { problem: ShootingProblem, u0: DVector<f64> },
}

/// A built problem with everything needed to run, check and plot it.
pub struct Instance {
    pub model: Model,
    pub geometry: Vec<NamedShape>,
    /// Chance constraint to score by sampling, for robust IK.
    pub chance: Option<(PlanarArm, ChanceConstraint, usize)>,
}

fn invalid(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Parse(e.to_string())
}

fn arm(links: &[f64], limit: f64) -> Result<PlanarArm, HarnessError> {
    PlanarArm::with_symmetric_limits(links.to_vec(), limit).map_err(invalid)
}

pub fn target_set(spec: &SetSpec) -> Result<Arc<dyn ProjectableSet>, HarnessError> {
    let v = |a: [f64; 2]| DVector::from_column_slice(&a);
    Ok(match spec {
        SetSpec::Point { at } => Arc::new(SingletonSet::new(v(*at))),
        SetSpec::Slab { normal, lower, upper } => Arc::new(
            AffineSlabSet::new(
                v(*normal),
                lower.unwrap_or(f64::NEG_INFINITY),
                upper.unwrap_or(f64::INFINITY),
            )
            .map_err(invalid)?,
        ),
        SetSpec::Annulus { center, inner, outer } => {
            Arc::new(QuadricAnnulusSet::from_radii(v(*center), *inner, *outer).map_err(invalid)?)
        }
        SetSpec::Box { center, weights, radius } => {
            Arc::new(BoxSet::weighted_inf_ball(&v(*center), &v(*weights), *radius).map_err(invalid)?)
        }
        SetSpec::Polygon { vertices, side } => {
            let poly = ConvexPolygon2D::new(vertices.iter().copied().map(pt).collect()).map_err(invalid)?;
            let mode = match side {
                PolygonSide::Onto => PolygonMode::Onto,
                PolygonSide::OutOf => PolygonMode::OutOf,
            };
            Arc::new(PolygonSet::new(poly, mode))
        }
        SetSpec::Curve { control_points } => Arc::new(
            BernsteinCurve2D::new(&control_points.iter().copied().map(pt).collect::<Vec<_>>()).map_err(invalid)?,
        ),
    })
}

fn target_geometry(spec: &SetSpec) -> Option<Shape> {
    match spec {
        SetSpec::Point { at } => Some(Shape::Point(*at)),
        SetSpec::Polygon { vertices, .. } => Some(Shape::Polygon(vertices.clone())),
        SetSpec::Curve { control_points } => Some(Shape::Curve(control_points.clone())),
        _ => None,
    }
}

/// Obstacles along the segment from `start` to `goal`: obstacle `i` of `count` sits near
/// the point `(i + 1)/(count + 1)` of the way, jittered by up to 0.3 along and 0.4
/// across the segment, with half extents in `[0.2, 0.5]` and a random heading.
/// Draws per obstacle, in order: along, across, half width, half height, angle.
/// Obstacles covering the start or goal (with a 0.1 margin) are redrawn.
pub fn generate_obstacles(
    rng: &mut SceneRng,
    start: [f64; 2],
    goal: [f64; 2],
    count: usize,
) -> Result<Vec<ConvexPolygon2D>, HarnessError> {
    let (s, g) = (pt(start), pt(goal));
    let dir = g - s;
    let len = dir.norm();
    if len == 0.0 {
        return Err(HarnessError::Parse("start and goal coincide".into()));
    }
    let (along, across) = (dir / len, Vector2::new(-dir.y / len, dir.x / len));
    let spacing = len / (count + 1) as f64;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        loop {
            let t = spacing * (i + 1) as f64 + rng.uniform(-0.3, 0.3);
            let c = s + along * t + across * rng.uniform(-0.4, 0.4);
            let (hw, hh) = (rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5));
            let angle = rng.uniform(0.0, std::f64::consts::PI);
            let poly = ConvexPolygon2D::rectangle(c, hw, hh, angle).map_err(invalid)?;
            if poly.signed_distance(&s) > 0.1 && poly.signed_distance(&g) > 0.1 {
                out.push(poly);
                break;
            }
        }
    }
    Ok(out)
}

fn polygon_shape(p: &ConvexPolygon2D) -> Shape {
    Shape::Polygon(p.vertices().iter().map(|v| [v[0], v[1]]).collect())
}

pub fn build(spec: &ProblemSpec, seed: u64) -> Result<Instance, HarnessError> {
    let mut rng = SceneRng::new(seed);
    let mut geometry = Vec::new();
    let mut chance = None;
    let model = match spec {
        ProblemSpec::Ik {
            links,
            joint_limit,
            q0,
            target,
        } => {
            let arm = arm(links, *joint_limit)?;
            let q0 = match q0 {
                Some(q) => DVector::from_column_slice(q),
                None => DVector::from_fn(arm.dof(), |_, _| rng.uniform(-joint_limit, *joint_limit)),
            };
            if let Some(shape) = target_geometry(target) {
                geometry.push(NamedShape {
                    name: "target".into(),
                    shape,
                });
            }
            Model::Static(ik_problem(&arm, &q0, target_set(target)?).map_err(invalid)?)
        }
        ProblemSpec::RobustIk {
            links,
            joint_limit,
            q0,
            mean,
            covariance,
            eta,
            samples,
        } => {
            let arm = arm(links, *joint_limit)?;
            let cc = ChanceConstraint {
                mean: Vector2::new(mean[0], mean[1]),
                covariance: Matrix2::new(covariance[0][0], covariance[0][1], covariance[1][0], covariance[1][1]),
                eta: *eta,
            };
            let prob = robust_ik_problem(&arm, &DVector::from_column_slice(q0), &cc).map_err(invalid)?;
            chance = Some((arm, cc, *samples));
            Model::Static(prob)
        }
        ProblemSpec::Talos {
            hand,
            inner,
            outer,
            posture,
        } => {
            let mut scene = TalosScene::standard(pt(*hand), *inner, *outer).map_err(invalid)?;
            scene.posture = match posture {
                Some(p) => DVector::from_column_slice(p),
                None => {
                    let mut p = DVector::from_fn(scene.dim(), |_, _| rng.uniform(-2.0, 2.0));
                    p[2] += FRAC_PI_2;
                    p
                }
            };
            geometry.push(NamedShape {
                name: "hand".into(),
                shape: Shape::Point(*hand),
            });
            Model::Static(talos_analog(&scene).map_err(invalid)?)
        }
        ProblemSpec::Push {
            half_width,
            dt,
            horizon,
            start,
            goal,
            goal_weight,
            control_weight,
            velocity_limit,
        } => {
            let goal = match goal {
                Some(g) => *g,
                None => [
                    rng.uniform(0.05, 0.15),
                    rng.uniform(-0.1, 0.1),
                    rng.uniform(-FRAC_PI_3, FRAC_PI_3),
                ],
            };
            let scene = PushScene {
                slider: PusherSlider::new(*half_width, *dt),
                start: *start,
                goal,
                horizon: *horizon,
                goal_weight: *goal_weight,
                control_weight: *control_weight,
                velocity_limit: *velocity_limit,
            };
            for (name, pose) in [("slider_start", [start[0], start[1], start[2]]), ("slider_goal", goal)] {
                let body = ConvexPolygon2D::rectangle(pt([pose[0], pose[1]]), *half_width, *half_width, pose[2])
                    .map_err(invalid)?;
                geometry.push(NamedShape {
                    name: name.into(),
                    shape: polygon_shape(&body),
                });
            }
            Model::Ocp {
                problem: push_problem(&scene).map_err(invalid)?,
                u0: scene.nominal_controls(),
            }
        }
        ProblemSpec::Car {
            model,
            dt,
            horizon,
            start,
            goal,
            robot,
            obstacles,
            random_obstacles,
            goal_weight,
            control_weight,
            control_limits,
        } => {
            if start.len() < 2 || goal.len() < 2 {
                return Err(HarnessError::Parse("car start and goal need positions".into()));
            }
            let robot = match robot {
                None => Footprint::Point(Vector2::zeros()),
                Some(ShapeSpec::Point { at }) => Footprint::Point(pt(*at)),
                Some(s) => Footprint::Polygon(
                    s.polygon()?
                        .ok_or_else(|| HarnessError::Parse("robot footprint must be a point or polygon".into()))?,
                ),
            };
            let mut polys = Vec::new();
            for o in obstacles {
                polys.push(
                    o.polygon()?
                        .ok_or_else(|| HarnessError::Parse("obstacles must be polygons".into()))?,
                );
            }
            polys.extend(generate_obstacles(
                &mut rng,
                [start[0], start[1]],
                [goal[0], goal[1]],
                *random_obstacles,
            )?);
            let scene = CarScene {
                model: *model,
                dt: *dt,
                horizon: *horizon,
                start: DVector::from_column_slice(start),
                goal: DVector::from_column_slice(goal),
                robot: robot.clone(),
                obstacles: polys.clone(),
                goal_weight: goal_weight.clone(),
                control_weight: *control_weight,
                control_limits: control_limits.clone(),
            };
            let problem = car_obstacle_problem(&scene).map_err(invalid)?;
            for (i, o) in polys.iter().enumerate() {
                geometry.push(NamedShape {
                    name: format!("obstacle_{i}"),
                    shape: polygon_shape(o),
                });
                if let Footprint::Polygon(_) = robot {
                    let c = c_obstacle(&robot, o).map_err(invalid)?;
                    geometry.push(NamedShape {
                        name: format!("c_obstacle_{i}"),
                        shape: polygon_shape(&c.sum),
                    });
                }
            }
            if let Some(fp) = robot.placed_at(pt([start[0], start[1]])) {
                geometry.push(NamedShape {
                    name: "robot".into(),
                    shape: polygon_shape(&fp),
                });
            }
            geometry.push(NamedShape {
                name: "start".into(),
                shape: Shape::Point([start[0], start[1]]),
            });
            geometry.push(NamedShape {
                name: "goal".into(),
                shape: Shape::Point([goal[0], goal[1]]),
            });
            Model::Ocp {
                u0: scene.nominal_controls(),
                problem,
            }
        }
        ProblemSpec::Reach {
            links,
            joint_limit,
            q_start,
            target,
            horizon,
            duration,
        } => {
            let arm = arm(links, *joint_limit)?;
            let problem = reach_problem(&arm, &DVector::from_column_slice(q_start), pt(*target), *horizon, *duration)
                .map_err(invalid)?;
            let u0 = DVector::zeros(problem.num_controls());
            geometry.push(NamedShape {
                name: "target".into(),
                shape: Shape::Point(*target),
            });
            Model::Ocp { problem, u0 }
        }
    };
    Ok(Instance {
        model,
        geometry,
        chance,
    })
}
