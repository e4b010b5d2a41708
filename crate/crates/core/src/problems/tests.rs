use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::{dvector, DVector, Matrix2, Vector2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::*;
use crate::alspg::{AlspgConfig, AlspgStatus, ConstraintMap};
use crate::geometry::{
    AffineSlabSet, BoxSet, ConvexPolygon2D, Footprint, Point2, ProjectableSet, QuadricAnnulusSet,
    SingletonSet,
};
use crate::ocp::{ilqr_baseline, reduced_objective, solve_ocp, DynamicsModel, IlqrConfig};

fn three_link() -> PlanarArm {
    PlanarArm::with_symmetric_limits(vec![1.0, 0.8, 0.6], 2.5).unwrap()
}

fn fd_vjp(map: &dyn ConstraintMap, x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
    let h = 1e-6;
    DVector::from_fn(x.len(), |j, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        (map.value(&xp) - map.value(&xm)).dot(r) / (2.0 * h)
    })
}

fn fd_linearization_error(model: &dyn DynamicsModel, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let h = 1e-6;
    let (a, b) = model.linearize(0, x, u);
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let fd = (model.step(0, &xp, u) - model.step(0, &xm, u)) / (2.0 * h);
        worst = worst.max((a.column(j) - fd).amax());
    }
    for j in 0..u.len() {
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        let fd = (model.step(0, x, &up) - model.step(0, x, &um)) / (2.0 * h);
        worst = worst.max((b.column(j) - fd).amax());
    }
    worst
}

#[test]
fn fk_examples() {
    let arm = PlanarArm::with_symmetric_limits(vec![1.0, 1.0], 3.0).unwrap();
    let (p, _) = arm_fk(&arm, &dvector![0.0, 0.0]);
    assert_relative_eq!(p, Point2::new(2.0, 0.0), epsilon = 1e-15);
    let (p, _) = arm_fk(&arm, &dvector![FRAC_PI_2, 0.0]);
    assert_relative_eq!(p, Point2::new(0.0, 2.0), epsilon = 1e-15);
    let (p, j) = arm_fk(&arm, &dvector![0.0, FRAC_PI_2]);
    assert_relative_eq!(p, Point2::new(1.0, 1.0), epsilon = 1e-15);
    // Rotating the base swings the whole arm; the elbow only the last link.
    let dense = jacobian_to_dmatrix(&j);
    assert_relative_eq!(dense, nalgebra::dmatrix![-1.0, -1.0; 1.0, 0.0], epsilon = 1e-15);
}

#[test]
fn arm_rejects_bad_links() {
    assert!(PlanarArm::with_symmetric_limits(vec![], 1.0).is_err());
    assert!(PlanarArm::with_symmetric_limits(vec![1.0, -0.5], 1.0).is_err());
    let limits = BoxSet::uniform(3, -1.0, 1.0).unwrap();
    assert!(PlanarArm::new(vec![1.0, 1.0], limits).is_err());
}

proptest! {
    #[test]
    fn arm_maps_match_finite_differences(
        q in prop::collection::vec(-3.0..3.0f64, 3),
        r in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let arm = three_link();
        let q = DVector::from_vec(q);
        let r = DVector::from_vec(r);
        for map in [
            Arc::new(EndEffectorMap { arm: arm.clone() }) as Arc<dyn ConstraintMap>,
            Arc::new(CenterOfMassMap { arm: arm.clone() }),
        ] {
            let err = (map.vjp(&q, &r) - fd_vjp(map.as_ref(), &q, &r)).amax();
            prop_assert!(err < 1e-7, "{err}");
        }
    }

    #[test]
    fn end_effector_stays_within_reach(q in prop::collection::vec(-3.0..3.0f64, 3)) {
        let arm = three_link();
        let (p, _) = arm.fk(&DVector::from_vec(q));
        prop_assert!(p.norm() <= arm.reach() + 1e-12);
    }
}

#[test]
fn quantile_matches_reference_values() {
    assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    assert_relative_eq!(normal_quantile(0.975).unwrap(), 1.959963984540054, epsilon = 1e-9);
    assert_relative_eq!(normal_quantile(0.8).unwrap(), 0.8416212335729143, epsilon = 1e-9);
    assert_relative_eq!(normal_quantile(0.01).unwrap(), -2.3263478740408408, epsilon = 1e-9);
}

#[test]
fn quantile_matches_statrs_inverse_cdf() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for k in 1..1000 {
        let p = k as f64 / 1000.0;
        let ours = normal_quantile(p).unwrap();
        assert!((ours - normal.inverse_cdf(p)).abs() < 1e-8, "p = {p}");
        assert!((normal.cdf(ours) - p).abs() < 1e-12, "p = {p}");
    }
    for p in [1e-10, 1e-6, 1.0 - 1e-6] {
        let ours = normal_quantile(p).unwrap();
        assert!((normal.cdf(ours) - p).abs() < 1e-8 * p.min(1.0 - p).max(1e-12) + 1e-15);
    }
}

#[test]
fn quantile_rejects_endpoints() {
    for p in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(matches!(normal_quantile(p), Err(ProblemError::QuantileDomain(_))));
    }
}

fn chance(eta: f64) -> ChanceConstraint {
    ChanceConstraint {
        mean: Vector2::new(1.0, 0.0),
        covariance: Matrix2::new(0.04, 0.01, 0.01, 0.02),
        eta,
    }
}

#[test]
fn half_level_reduces_to_halfspace() {
    let arm = three_link();
    let prob = robust_ik_problem(&arm, &dvector![0.2, 0.1, 0.0], &chance(0.5)).unwrap();
    let q = dvector![0.3, 0.2, 0.1];
    let g = prob.blocks[0].map.value(&q);
    assert_eq!(g.len(), 2);
    let halfspace = AffineSlabSet::halfspace(dvector![1.0, 0.0], 0.0).unwrap();
    assert_eq!(prob.blocks[0].set.contains(&g), halfspace.contains(&g));
}

#[test]
fn robust_ik_validates_inputs() {
    let arm = three_link();
    let q0 = dvector![0.2, 0.1, 0.0];
    let mut bad = chance(0.8);
    bad.covariance = Matrix2::new(1.0, 0.0, 0.0, -0.5);
    assert!(matches!(robust_ik_problem(&arm, &q0, &bad), Err(ProblemError::NotPsd(_))));
    assert!(robust_ik_problem(&arm, &q0, &chance(0.3)).is_err());
    assert!(robust_ik_problem(&arm, &q0, &chance(1.0)).is_err());
}

#[test]
fn robust_cone_map_vjp_matches_finite_differences() {
    let arm = three_link();
    let prob = robust_ik_problem(&arm, &dvector![0.2, 0.1, 0.0], &chance(0.9)).unwrap();
    let map = prob.blocks[0].map.as_ref();
    let q = dvector![0.4, -0.3, 0.7];
    let r = dvector![0.3, -0.5, 0.8];
    assert!((map.vjp(&q, &r) - fd_vjp(map, &q, &r)).amax() < 1e-7);
}

#[test]
fn robust_ik_solution_meets_chance_level() {
    let arm = three_link();
    // The preferred pose points straight along +x, violating `aᵀf ≤ 0` for a ≈ e_x.
    let q0 = dvector![0.0, 0.0, 0.0];
    let cc = chance(0.8);
    let prob = robust_ik_problem(&arm, &q0, &cc).unwrap();
    let res = prob.solve(&AlspgConfig::default()).unwrap();
    assert_eq!(res.status, AlspgStatus::Converged);
    let (p, _) = arm.fk(&res.x_star);
    let sqrt = cc.covariance_sqrt().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 20_000;
    let hits = (0..n)
        .filter(|_| {
            let z = Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let a = cc.mean + sqrt * z;
            a.dot(&p) <= 0.0
        })
        .count();
    let rate = hits as f64 / n as f64;
    // The constraint is active, so the satisfaction rate sits at the level itself.
    assert!((rate - 0.8).abs() < 0.02, "{rate}");
}

#[test]
fn covariance_sqrt_squares_back() {
    let s = chance(0.8).covariance_sqrt().unwrap();
    assert_relative_eq!(s * s, chance(0.8).covariance, epsilon = 1e-14);
}

fn ik_targets() -> Vec<(&'static str, Arc<dyn ProjectableSet>)> {
    vec![
        ("singleton", Arc::new(SingletonSet::new(dvector![0.5, 1.2]))),
        ("halfspace", Arc::new(AffineSlabSet::halfspace(dvector![1.0, 1.0], -0.5).unwrap())),
        (
            "annulus",
            Arc::new(QuadricAnnulusSet::from_radii(dvector![1.0, 1.0], 0.2, 0.4).unwrap()),
        ),
        (
            "box",
            Arc::new(BoxSet::weighted_inf_ball(&dvector![-0.5, 1.0], &dvector![1.0, 2.0], 0.2).unwrap()),
        ),
    ]
}

#[test]
fn ik_converges_for_every_target_type() {
    let arm = three_link();
    let q0 = dvector![0.1, 0.2, -0.1];
    for (name, target) in ik_targets() {
        let prob = ik_problem(&arm, &q0, target.clone()).unwrap();
        let res = prob.solve(&AlspgConfig::default()).unwrap();
        assert_eq!(res.status, AlspgStatus::Converged, "{name}");
        assert!(prob.domain.contains(&res.x_star), "{name}");
        let (p, _) = arm.fk(&res.x_star);
        let proj = target.project(&DVector::from_column_slice(p.as_slice())).unwrap();
        assert!((DVector::from_column_slice(p.as_slice()) - proj).norm() < 1e-3, "{name}");
    }
}

#[test]
fn ik_rejects_mismatched_inputs() {
    let arm = three_link();
    let target: Arc<dyn ProjectableSet> = Arc::new(SingletonSet::new(dvector![0.5, 1.2]));
    assert!(ik_problem(&arm, &dvector![0.0, 0.0], target).is_err());
    let wrong: Arc<dyn ProjectableSet> = Arc::new(SingletonSet::new(dvector![0.5, 1.2, 0.0]));
    assert!(ik_problem(&arm, &dvector![0.0, 0.0, 0.0], wrong).is_err());
}

#[test]
fn ik_starting_feasible_stays_put() {
    let arm = three_link();
    let q0 = dvector![0.3, 0.2, 0.1];
    let (p, _) = arm.fk(&q0);
    let target: Arc<dyn ProjectableSet> =
        Arc::new(QuadricAnnulusSet::ball(DVector::from_column_slice(p.as_slice()), 0.1).unwrap());
    let res = ik_problem(&arm, &q0, target).unwrap().solve(&AlspgConfig::default()).unwrap();
    assert_eq!(res.status, AlspgStatus::Converged);
    assert_relative_eq!(res.x_star, q0, epsilon = 1e-12);
}

#[test]
fn plain_constraint_variant_reaches_the_same_solution() {
    let arm = three_link();
    let q0 = dvector![0.1, 0.2, -0.1];
    for (name, target) in ik_targets() {
        let prob = ik_problem(&arm, &q0, target).unwrap();
        let plain = without_projections(&prob).unwrap();
        assert!(plain.blocks.iter().all(|b| b.set.dim() == Some(b.map.output_dim())));
        let a = prob.solve(&AlspgConfig::default()).unwrap();
        let b = plain.solve(&AlspgConfig::default()).unwrap();
        assert_eq!(b.status, AlspgStatus::Converged, "{name}");
        assert!((a.f_star - b.f_star).abs() < 1e-2 * (1.0 + a.f_star), "{name}: {} vs {}", a.f_star, b.f_star);
    }
}

#[test]
fn plain_constraint_is_zero_exactly_on_the_set() {
    let arm = three_link();
    let annulus: Arc<dyn ProjectableSet> =
        Arc::new(QuadricAnnulusSet::from_radii(dvector![1.0, 1.0], 0.2, 0.4).unwrap());
    let prob = ik_problem(&arm, &dvector![0.0, 0.0, 0.0], annulus.clone()).unwrap();
    let plain = without_projections(&prob).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let q = DVector::from_fn(3, |_, _| rand::Rng::random_range(&mut rng, -2.5..2.5));
        let (p, _) = arm.fk(&q);
        let inside = annulus.contains(&DVector::from_column_slice(p.as_slice()));
        let h = plain.blocks[0].map.value(&q);
        assert_eq!(inside, h.amax() <= 1e-9);
    }
}

#[test]
fn talos_analog_satisfies_all_blocks() {
    let scene = TalosScene::standard(Point2::new(2.0, 2.5), 0.0, 0.1).unwrap();
    let prob = talos_analog(&scene).unwrap();
    let res = prob.solve(&AlspgConfig::default()).unwrap();
    assert_eq!(res.status, AlspgStatus::Converged);
    assert!(prob.is_feasible(&res.x_star, 1e-3));
    assert_relative_eq!(res.x_star.rows(0, 3).into_owned(), DVector::from_column_slice(&scene.foot), epsilon = 1e-3);
}

#[test]
fn talos_maps_match_finite_differences() {
    let scene = TalosScene::standard(Point2::new(2.0, 2.5), 0.0, 0.1).unwrap();
    let prob = talos_analog(&scene).unwrap();
    let x = dvector![0.1, -0.2, 1.3, 0.2, -0.4, 0.3, 0.1, -0.2];
    for b in &prob.blocks {
        let r = DVector::from_fn(b.map.output_dim(), |i, _| 0.3 - 0.2 * i as f64);
        let err = (b.map.vjp(&x, &r) - fd_vjp(b.map.as_ref(), &x, &r)).amax();
        assert!(err < 1e-7, "{}: {err}", b.name);
    }
}

fn slider() -> PusherSlider {
    PusherSlider::new(0.05, 0.1)
}

#[test]
fn central_push_translates() {
    let s = slider();
    let x = dvector![0.0, 0.0, 0.3, 0.0];
    let next = s.step(0, &x, &dvector![0.1, 0.0]);
    assert_relative_eq!(next[2], 0.3, epsilon = 1e-15);
    let heading = Vector2::new(0.3f64.cos(), 0.3f64.sin());
    let moved = Vector2::new(next[0], next[1]);
    assert_relative_eq!(moved.normalize(), heading, epsilon = 1e-12);
    assert_relative_eq!(moved.norm(), 0.1 * 0.1, epsilon = 1e-12);
}

#[test]
fn offset_push_turns_away_from_contact() {
    let s = slider();
    // Contact above the center: pushing along +x turns the slider clockwise.
    let above = s.step(0, &dvector![0.0, 0.0, 0.0, 0.03], &dvector![0.1, 0.0]);
    assert!(above[2] < 0.0);
    let below = s.step(0, &dvector![0.0, 0.0, 0.0, -0.03], &dvector![0.1, 0.0]);
    assert_relative_eq!(below[2], -above[2], epsilon = 1e-15);
}

#[test]
fn sticking_contact_point_follows_pusher() {
    let s = slider();
    let p = 0.02;
    let u = Vector2::new(0.07, -0.03);
    let (v, omega) = s.body_twist(p, &u).unwrap();
    // Velocity of the slider material at the contact point (−a, p).
    let contact = Vector2::new(v[0] - omega * p, v[1] + omega * -s.half_width);
    assert_relative_eq!(contact, u, epsilon = 1e-14);
}

#[test]
fn separating_pusher_leaves_slider_still() {
    let s = slider();
    let x = dvector![0.2, -0.1, 0.4, 0.01];
    assert_eq!(s.step(0, &x, &dvector![-0.05, 0.03]), x);
    assert_eq!(s.step(0, &x, &dvector![0.0, 0.03]), x);
}

#[test]
fn pusher_linearization_matches_finite_differences() {
    let s = slider();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let x = DVector::from_fn(4, |i, _| {
            let r: f64 = rand::Rng::random_range(&mut rng, -1.0..1.0);
            if i == 3 { 0.04 * r } else { r }
        });
        let u = dvector![rand::Rng::random_range(&mut rng, 0.01..0.2), rand::Rng::random_range(&mut rng, -0.2..0.2)];
        assert!(fd_linearization_error(&s, &x, &u) < 1e-7);
    }
}

fn push_scene(limit: Option<f64>) -> PushScene {
    PushScene {
        slider: slider(),
        start: [0.0, 0.0, 0.0, 0.0],
        goal: [0.3, 0.1, 0.3],
        horizon: 40,
        goal_weight: [100.0, 100.0, 10.0],
        control_weight: 1e-2,
        velocity_limit: limit,
    }
}

#[test]
fn push_rejects_offset_off_the_face() {
    let mut scene = push_scene(None);
    scene.start[3] = 0.2;
    assert!(push_problem(&scene).is_err());
}

#[test]
fn push_planning_reaches_goal_with_both_solvers() {
    let scene = push_scene(None);
    let prob = push_problem(&scene).unwrap();
    let u0 = scene.nominal_controls();
    let start_cost = reduced_objective(&prob, &u0).unwrap().0;
    let il = ilqr_baseline(&prob, &u0, &IlqrConfig::default()).unwrap();
    assert!(il.f_star < 0.1 * start_cost);

    let constrained = push_problem(&push_scene(Some(0.5))).unwrap();
    let res = solve_ocp(&constrained, &u0, &AlspgConfig::default()).unwrap();
    assert!(res.f_star < 0.1 * start_cost);
    assert!(constrained.control_domain.contains(&res.x_star));
}

fn car_scene() -> CarScene {
    CarScene {
        model: CarModel::Point,
        dt: 0.1,
        horizon: 30,
        start: dvector![0.0, 0.0, 0.0, 0.0],
        goal: dvector![4.0, 0.0, 0.0, 0.0],
        robot: Footprint::Point(Point2::zeros()),
        obstacles: vec![ConvexPolygon2D::rectangle(Point2::new(2.0, 0.1), 0.3, 0.3, 0.0).unwrap()],
        goal_weight: vec![100.0, 100.0, 10.0, 10.0],
        control_weight: 1e-2,
        control_limits: None,
    }
}

#[test]
fn car_start_inside_obstacle_is_rejected() {
    let mut scene = car_scene();
    scene.start = dvector![2.0, 0.1, 0.0, 0.0];
    assert!(matches!(car_obstacle_problem(&scene), Err(ProblemError::StartInCollision(0))));
    // A polygonal robot grows the configuration-space obstacle.
    let mut scene = car_scene();
    scene.start = dvector![1.5, 0.1, 0.0, 0.0];
    assert!(car_obstacle_problem(&scene).is_ok());
    scene.robot = Footprint::Polygon(ConvexPolygon2D::rectangle(Point2::zeros(), 0.3, 0.3, 0.0).unwrap());
    assert!(car_obstacle_problem(&scene).is_err());
}

#[test]
fn point_car_avoids_obstacle() {
    let scene = car_scene();
    let prob = car_obstacle_problem(&scene).unwrap();
    let res = solve_ocp(&prob, &scene.nominal_controls(), &AlspgConfig::default()).unwrap();
    assert_eq!(res.status, AlspgStatus::Converged);
    let traj = prob.rollout(&res.x_star).unwrap();
    let obstacle = &scene.obstacles[0];
    for x in traj.states() {
        assert!(obstacle.signed_distance(&Point2::new(x[0], x[1])) > -1e-3);
    }
    assert!((traj.final_state()[0] - 4.0).abs() < 0.1);
}

#[test]
fn bicycle_scene_builds_with_control_limits() {
    let mut scene = car_scene();
    scene.model = CarModel::Bicycle { wheelbase: 2.7 };
    scene.control_limits = Some(vec![0.5, 2.0]);
    let prob = car_obstacle_problem(&scene).unwrap();
    assert_eq!(prob.num_controls(), 60);
    assert_eq!(prob.control_domain.dim(), Some(60));
    assert_eq!(prob.constraints.len(), 1);
    let plain = without_projections_ocp(&prob).unwrap();
    assert_eq!(plain.constraints[0].map.output_dim(), 30);
}

#[test]
fn reach_cost_gradient_matches_finite_differences() {
    let arm = three_link();
    let prob = reach_problem(&arm, &dvector![0.3, 0.2, 0.1], Point2::new(0.5, 1.5), 12, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = DVector::from_fn(prob.num_controls(), |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
    let (_, g) = reduced_objective(&prob, &u).unwrap();
    let h = 1e-6;
    for j in 0..u.len() {
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        let fd = (reduced_objective(&prob, &up).unwrap().0 - reduced_objective(&prob, &um).unwrap().0) / (2.0 * h);
        assert!((g[j] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{j}: {} vs {fd}", g[j]);
    }
}

#[test]
fn reach_solvers_agree() {
    let arm = three_link();
    let prob = reach_problem(&arm, &dvector![0.3, 0.2, 0.1], Point2::new(1.6, 1.2), 20, 1.0).unwrap();
    let u0 = DVector::zeros(prob.num_controls());
    let il = ilqr_baseline(&prob, &u0, &IlqrConfig::default()).unwrap();
    let spg = solve_ocp(&prob, &u0, &AlspgConfig::default()).unwrap();
    assert!((il.f_star - spg.f_star).abs() < 1e-3 * (1.0 + il.f_star), "{} vs {}", il.f_star, spg.f_star);
}

#[test]
fn fk_three_unit_links() {
    let arm = PlanarArm::with_symmetric_limits(vec![1.0; 3], 3.0).unwrap();
    assert_relative_eq!(arm.fk(&dvector![0.0, 0.0, 0.0]).0, Point2::new(3.0, 0.0), epsilon = 1e-15);
    assert_relative_eq!(arm.fk(&dvector![FRAC_PI_2, 0.0, 0.0]).0, Point2::new(0.0, 3.0), epsilon = 1e-15);
}

#[test]
fn ik_reaches_point_on_x_axis() {
    let arm = three_link();
    let goal = dvector![1.5, 0.0];
    let target: Arc<dyn ProjectableSet> = Arc::new(SingletonSet::new(goal.clone()));
    let residual = |q: &DVector<f64>| (DVector::from_column_slice(arm.fk(q).0.as_slice()) - &goal).norm();

    // The straight arm is a saddle: every gradient vanishes by symmetry, so a first-order
    // method cannot leave it and must say so rather than report success.
    let res = ik_problem(&arm, &DVector::zeros(3), target.clone())
        .unwrap()
        .solve(&AlspgConfig::default())
        .unwrap();
    assert_ne!(res.status, AlspgStatus::Converged);
    assert_eq!(res.x_star, DVector::zeros(3));

    let res = ik_problem(&arm, &dvector![0.0, 0.1, 0.0], target)
        .unwrap()
        .solve(&AlspgConfig::default())
        .unwrap();
    assert_eq!(res.status, AlspgStatus::Converged);
    assert!(residual(&res.x_star) <= 1e-4, "{}", residual(&res.x_star));
}

#[test]
fn car_without_obstacles_is_plain_point_to_point() {
    let mut scene = car_scene();
    scene.obstacles.clear();
    let prob = car_obstacle_problem(&scene).unwrap();
    assert!(prob.constraints.is_empty());
    let res = solve_ocp(&prob, &scene.nominal_controls(), &AlspgConfig::default()).unwrap();
    let il = ilqr_baseline(&prob, &scene.nominal_controls(), &IlqrConfig::default()).unwrap();
    assert!((res.f_star - il.f_star).abs() < 1e-4 * (1.0 + il.f_star));
}
