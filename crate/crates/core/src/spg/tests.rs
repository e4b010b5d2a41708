use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::{BoxSet, ProjectableSet, QuadricAnnulusSet, WholeSpace};

fn quadratic(q: DMatrix<f64>, c: DVector<f64>) -> impl Objective {
    let q2 = q.clone();
    let c2 = c.clone();
    FnObjective::new(
        c.len(),
        move |x: &DVector<f64>| 0.5 * x.dot(&(&q * x)) + c.dot(x),
        move |x: &DVector<f64>| &q2 * x + &c2,
    )
}

fn random_spd(n: usize, cond: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let qr = a.qr();
    let u = qr.q();
    let eig = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            cond.powf(i as f64 / (n - 1) as f64)
        }
    });
    &u * DMatrix::from_diagonal(&eig) * u.transpose()
}

/// Minimizes a strictly convex quadratic over a box by enumerating every assignment of
/// coordinates to lower bound, upper bound, or free, keeping the feasible KKT points.
fn box_qp_by_enumeration(q: &DMatrix<f64>, c: &DVector<f64>, l: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    let n = c.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rem = code;
        for s in state.iter_mut() {
            *s = (rem % 3) as u8;
            rem /= 3;
        }
        let mut x = DVector::zeros(n);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        for i in 0..n {
            match state[i] {
                0 => x[i] = l[i],
                1 => x[i] = u[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            let k = free.len();
            let qff = DMatrix::from_fn(k, k, |a, b| q[(free[a], free[b])]);
            let mut rhs = DVector::from_fn(k, |a, _| -c[free[a]]);
            for (a, &i) in free.iter().enumerate() {
                for j in 0..n {
                    if state[j] != 2 {
                        rhs[a] -= q[(i, j)] * x[j];
                    }
                }
            }
            let sol = qff.cholesky().unwrap().solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                x[i] = sol[a];
            }
        }
        if (0..n).any(|i| x[i] < l[i] - 1e-12 || x[i] > u[i] + 1e-12) {
            continue;
        }
        let val = 0.5 * x.dot(&(q * &x)) + c.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, x));
        }
    }
    best.unwrap().1
}

#[test]
fn converges_to_box_corner() {
    let mut obj = quadratic(DMatrix::identity(2, 2), dvector![-5.0, -5.0]);
    let mut oracle = ObjectiveOracle::new(&mut obj);
    let domain = BoxSet::uniform(2, 0.0, 1.0).unwrap();
    let res = spg_minimize(&mut oracle, &domain, &dvector![0.2, 0.3], &SpgConfig::default()).unwrap();
    assert_eq!(res.status, SpgStatus::Converged);
    assert!((res.x_star - dvector![1.0, 1.0]).amax() < 1e-8);
}

#[test]
fn unconstrained_quadratic_matches_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_spd(6, 50.0, &mut rng);
    let c = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
    let exact = q.clone().cholesky().unwrap().solve(&(-&c));
    let mut obj = quadratic(q, c);
    let mut oracle = ObjectiveOracle::new(&mut obj);
    let cfg = SpgConfig { tol: 1e-10, ..SpgConfig::default() };
    let res = spg_minimize(&mut oracle, &WholeSpace, &DVector::zeros(6), &cfg).unwrap();
    assert_eq!(res.status, SpgStatus::Converged);
    assert!((res.x_star - exact).amax() < 1e-8);
}

#[test]
fn ball_constraint_lands_on_sphere() {
    // Minimizing ‖x − (3, 4)‖² over the unit ball gives (0.6, 0.8).
    let mut obj = quadratic(DMatrix::identity(2, 2) * 2.0, dvector![-6.0, -8.0]);
    let mut oracle = ObjectiveOracle::new(&mut obj);
    let ball = QuadricAnnulusSet::ball(dvector![0.0, 0.0], 1.0).unwrap();
    let res = spg_minimize(&mut oracle, &ball, &dvector![0.0, 0.0], &SpgConfig::default()).unwrap();
    assert_eq!(res.status, SpgStatus::Converged);
    assert!((res.x_star - dvector![0.6, 0.8]).amax() < 1e-6);
}

#[test]
fn random_box_qps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = 4;
        let q = random_spd(n, 20.0, &mut rng);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let l = DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
        let u = DVector::from_fn(n, |i, _| l[i] + rng.random_range(0.2..1.5));
        let oracle_x = box_qp_by_enumeration(&q, &c, &l, &u);
        let domain = BoxSet::new(l, u).unwrap();
        let mut obj = quadratic(q, c);
        let mut oracle = ObjectiveOracle::new(&mut obj);
        let cfg = SpgConfig { tol: 1e-10, ..SpgConfig::default() };
        let res = spg_minimize(&mut oracle, &domain, &DVector::zeros(n), &cfg).unwrap();
        assert_eq!(res.status, SpgStatus::Converged);
        assert!((res.x_star - oracle_x).amax() < 1e-7);
    }
}

#[test]
fn spectral_stepsize_on_quadratic_lies_in_inverse_eigen_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_spd(5, 100.0, &mut rng);
    let cfg = SpgConfig::default();
    for _ in 0..100 {
        let s = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let y = &q * &s;
        let gamma = spectral_stepsize(&s, &y, &cfg);
        assert!(gamma >= 1.0 / 100.0 * (1.0 - 1e-9));
        assert!(gamma <= 1.0 + 1e-9);
    }
}

#[test]
fn spectral_stepsize_falls_back_on_negative_curvature() {
    let cfg = SpgConfig::default();
    assert_eq!(spectral_stepsize(&dvector![1.0], &dvector![-1.0], &cfg), cfg.gamma_max);
    assert_eq!(spectral_stepsize(&dvector![1.0], &dvector![0.0], &cfg), cfg.gamma_max);
}

#[test]
fn spectral_stepsize_short_branch() {
    let cfg = SpgConfig::default();
    // s = (1, 0), y = (1, 0): long = short = 1, so the short step is taken.
    assert_eq!(spectral_stepsize(&dvector![1.0, 0.0], &dvector![1.0, 0.0], &cfg), 1.0);
    // s = (1, 1), y = (1, 10): long = 2/11, short = 11/101, long < 2·short.
    let g = spectral_stepsize(&dvector![1.0, 1.0], &dvector![1.0, 10.0], &cfg);
    assert!((g - 11.0 / 101.0).abs() < 1e-15);
    // s = (1, 1), y = (1, −0.5): long = 4, short = 0.4, so long − short/2 = 3.8.
    let g = spectral_stepsize(&dvector![1.0, 1.0], &dvector![1.0, -0.5], &cfg);
    assert!((g - 3.8).abs() < 1e-12);
}

#[test]
fn warm_start_skips_probe_gradient() {
    let q = DMatrix::from_diagonal(&dvector![1.0, 4.0]);
    let c = dvector![-1.0, -1.0];
    let domain = WholeSpace;
    let cfg = SpgConfig::default();

    let mut cold_obj = quadratic(q.clone(), c.clone());
    let mut cold = ObjectiveOracle::new(&mut cold_obj);
    let cold_res = spg_minimize(&mut cold, &domain, &dvector![3.0, 3.0], &cfg).unwrap();

    let mut warm_obj = quadratic(q, c);
    let mut warm = ObjectiveOracle::new(&mut warm_obj);
    let warm_res = spg_minimize_warm(&mut warm, &domain, &dvector![3.0, 3.0], &cfg, Some(0.5)).unwrap();
    assert_eq!(cold_res.status, SpgStatus::Converged);
    assert_eq!(warm_res.status, SpgStatus::Converged);
    assert_eq!(warm_res.history[0].gamma, 0.5);
    assert_eq!(cold_res.history[0].counters.n_grad, 2);
    assert_eq!(warm_res.history[0].counters.n_grad, 1);
}

#[test]
fn history_csv_has_one_row_per_iterate() {
    let mut obj = quadratic(DMatrix::identity(3, 3), dvector![1.0, 2.0, 3.0]);
    let mut oracle = ObjectiveOracle::new(&mut obj);
    let res = spg_minimize(&mut oracle, &WholeSpace, &DVector::zeros(3), &SpgConfig::default()).unwrap();
    let mut buf = Vec::new();
    res.write_history_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,f,stationarity,gamma,alpha,n_f,n_grad"));
    assert_eq!(lines.count(), res.history.len());
}

#[test]
fn rejects_bad_config_and_dimension() {
    let mut obj = quadratic(DMatrix::identity(2, 2), dvector![0.0, 0.0]);
    let mut oracle = ObjectiveOracle::new(&mut obj);
    let bad = SpgConfig { gamma_min: 2.0, gamma_max: 1.0, ..SpgConfig::default() };
    assert!(matches!(
        spg_minimize(&mut oracle, &WholeSpace, &dvector![0.0, 0.0], &bad),
        Err(SpgError::InvalidConfig(_))
    ));
    assert!(matches!(
        spg_minimize(&mut oracle, &WholeSpace, &dvector![0.0], &SpgConfig::default()),
        Err(SpgError::DimensionMismatch { expected: 2, got: 1 })
    ));
}

#[test]
fn nonconvex_annulus_keeps_iterates_feasible() {
    // Pull toward the origin while staying in the ring 1 ≤ ‖x‖ ≤ 2.
    let ring = QuadricAnnulusSet::from_radii(dvector![0.0, 0.0], 1.0, 2.0).unwrap();
    let mut obj = quadratic(DMatrix::identity(2, 2), dvector![-0.1, 0.0]);
    let mut oracle = ObjectiveOracle::new(&mut obj);
    let res = spg_minimize(&mut oracle, &ring, &dvector![1.5, 0.5], &SpgConfig::default()).unwrap();
    assert_eq!(res.status, SpgStatus::Converged);
    assert!(ring.contains(&res.x_star));
    assert!((res.x_star - dvector![1.0, 0.0]).amax() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterates_stay_in_box_and_below_envelope(seed in 0u64..10_000, n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_spd(n, 1e3, &mut rng);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let domain = BoxSet::uniform(n, -1.0, 1.0).unwrap();
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let mut obj = quadratic(q.clone(), c.clone());
        let mut oracle = ObjectiveOracle::new(&mut obj);
        let cfg = SpgConfig { max_iter: 5000, ..SpgConfig::default() };
        let res = spg_minimize(&mut oracle, &domain, &x0, &cfg).unwrap();
        prop_assert_eq!(res.status, SpgStatus::Converged);
        prop_assert!(domain.contains(&res.x_star));
        prop_assert!(res.stationarity <= cfg.tol);

        // Each accepted value respects the non-monotone envelope.
        let m = cfg.line_search.memory;
        for k in 1..res.history.len() {
            let prev = &res.history[k - 1];
            let lo = k.saturating_sub(m);
            let f_max = res.history[lo..k].iter().map(|h| h.f).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(res.history[k].f <= f_max + prev.alpha * cfg.line_search.beta * prev.slope + 1e-12);
            prop_assert!(prev.gamma >= cfg.gamma_min && prev.gamma <= cfg.gamma_max);
        }
    }
}
