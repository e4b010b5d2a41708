//! Planar Bernstein curves `S(t) = basis(t)ᵀ M Φ` and nearest-point projection.

use nalgebra::{DMatrix, DVector};

use super::{check_dim, GeometryError, Point2, ProjectableSet, DEFAULT_TOL};

const GRID_SAMPLES: usize = 64;
const MAX_CANDIDATES: usize = 8;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Characteristic matrix mapping the power basis `(1, t, …, t^r)` to the Bernstein
/// basis of degree `r`: entry `(i, j)` is the coefficient of `tⁱ` in `B_{j,r}(t)`.
pub(crate) fn characteristic_matrix(degree: usize) -> DMatrix<f64> {
    let c = degree + 1;
    DMatrix::from_fn(c, c, |i, j| {
        if i < j {
            0.0
        } else {
            let sign = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(degree, j) * binomial(degree - j, i - j)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinCurve2D {
    degree: usize,
    control_points: DMatrix<f64>,
    characteristic: DMatrix<f64>,
    /// Power-form coefficients `M Φ`, one row per power of `t`.
    coefficients: DMatrix<f64>,
    tol: f64,
}

impl BernsteinCurve2D {
    /// Curve of degree `len − 1` through the given control polygon.
    pub fn new(control_points: &[Point2]) -> Result<Self, GeometryError> {
        if control_points.len() < 2 {
            return Err(GeometryError::InvalidCurve(
                "need at least two control points".into(),
            ));
        }
        let phi = DMatrix::from_fn(control_points.len(), 2, |i, j| control_points[i][j]);
        Self::from_matrix(phi)
    }

    fn from_matrix(control_points: DMatrix<f64>) -> Result<Self, GeometryError> {
        if control_points.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let degree = control_points.nrows() - 1;
        let characteristic = characteristic_matrix(degree);
        let coefficients = &characteristic * &control_points;
        Ok(Self {
            degree,
            control_points,
            characteristic,
            coefficients,
            tol: DEFAULT_TOL,
        })
    }

    /// Least-squares fit of a degree-`degree` curve to samples `(tᵢ, pᵢ)`.
    pub fn fit(samples: &[(f64, Point2)], degree: usize) -> Result<Self, GeometryError> {
        if degree == 0 {
            return Err(GeometryError::InvalidCurve("degree must be at least 1".into()));
        }
        if samples.len() <= degree {
            return Err(GeometryError::InvalidCurve(format!(
                "{} samples cannot determine a degree-{degree} curve",
                samples.len()
            )));
        }
        if let Some(&(t, _)) = samples.iter().find(|(t, _)| !(0.0..=1.0).contains(t)) {
            return Err(GeometryError::ParameterOutOfDomain(t));
        }
        let m = characteristic_matrix(degree);
        let basis = DMatrix::from_fn(samples.len(), degree + 1, |row, col| {
            samples[row].0.powi(col as i32)
        }) * &m;
        let targets = DMatrix::from_fn(samples.len(), 2, |row, col| samples[row].1[col]);
        let phi = basis
            .svd(true, true)
            .solve(&targets, 1e-12)
            .map_err(|e| GeometryError::InvalidCurve(e.to_string()))?;
        Self::from_matrix(phi)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn control_points(&self) -> Vec<Point2> {
        self.control_points
            .row_iter()
            .map(|r| Point2::new(r[0], r[1]))
            .collect()
    }

    pub fn characteristic(&self) -> &DMatrix<f64> {
        &self.characteristic
    }

    /// Point, first and second derivative at `t` (no domain check).
    fn jet(&self, t: f64) -> (Point2, Point2, Point2) {
        let mut p = Point2::zeros();
        let mut d1 = Point2::zeros();
        let mut d2 = Point2::zeros();
        for k in (0..=self.degree).rev() {
            let c = Point2::new(self.coefficients[(k, 0)], self.coefficients[(k, 1)]);
            d2 = d2 * t + d1 * 2.0;
            d1 = d1 * t + p;
            p = p * t + c;
        }
        (p, d1, d2)
    }

    /// Curve point and tangent `dS/dt` at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<(Point2, Point2), GeometryError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(GeometryError::ParameterOutOfDomain(t));
        }
        let (p, d1, _) = self.jet(t);
        Ok((p, d1))
    }

    /// Parameter and point of the curve nearest to `p`: every local minimum of a
    /// 64-sample parameter grid is refined by safeguarded Newton steps on
    /// `½‖S(t) − p‖²`. The result is never farther than the best grid sample.
    pub fn closest_point(&self, p: &Point2) -> (f64, Point2) {
        let dist2 = |t: f64| (self.jet(t).0 - p).norm_squared();
        let grid: Vec<(f64, f64)> = (0..GRID_SAMPLES)
            .map(|k| {
                let t = k as f64 / (GRID_SAMPLES - 1) as f64;
                (t, dist2(t))
            })
            .collect();
        let mut seeds: Vec<usize> = (0..GRID_SAMPLES)
            .filter(|&k| {
                let left = k == 0 || grid[k].1 <= grid[k - 1].1;
                let right = k + 1 == GRID_SAMPLES || grid[k].1 <= grid[k + 1].1;
                left && right
            })
            .collect();
        seeds.sort_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1));
        seeds.truncate(MAX_CANDIDATES);

        let mut best = seeds
            .first()
            .map(|&k| grid[k])
            .expect("grid has a minimum");
        for &k in &seeds {
            let (t, d) = self.refine(p, grid[k].0, grid[k].1);
            if d < best.1 {
                best = (t, d);
            }
        }
        (best.0, self.jet(best.0).0)
    }

    fn refine(&self, p: &Point2, mut t: f64, mut d: f64) -> (f64, f64) {
        for _ in 0..50 {
            let (s, s1, s2) = self.jet(t);
            let r = s - p;
            let grad = r.dot(&s1);
            let curv = s1.norm_squared() + r.dot(&s2);
            let step = if curv > 0.0 {
                -grad / curv
            } else {
                -grad / (s1.norm_squared() + 1e-12)
            };
            if step.abs() < 1e-15 {
                break;
            }
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = (t + alpha * step).clamp(0.0, 1.0);
                let dt = (self.jet(trial).0 - p).norm_squared();
                if dt < d {
                    t = trial;
                    d = dt;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (t, d)
    }

    /// Nearest curve point to `p`.
    pub fn project_point(&self, p: &Point2) -> Point2 {
        self.closest_point(p).1
    }

    pub fn distance(&self, p: &Point2) -> f64 {
        (self.project_point(p) - p).norm()
    }
}

/// Nearest point on the curve; free-function form of [`BernsteinCurve2D::project_point`].
pub fn project_bernstein(p: &Point2, curve: &BernsteinCurve2D) -> Point2 {
    curve.project_point(p)
}

impl ProjectableSet for BernsteinCurve2D {
    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        check_dim(2, p.len())?;
        let q = self.project_point(&Point2::new(p[0], p[1]));
        Ok(DVector::from_column_slice(q.as_slice()))
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.len() == 2 && self.distance(&Point2::new(p[0], p[1])) <= tol
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        (p.len() == 2).then(|| DVector::from_element(1, self.distance(&Point2::new(p[0], p[1]))))
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != 2 || r.len() != 1 {
            return None;
        }
        let q = Point2::new(p[0], p[1]);
        let diff = q - self.project_point(&q);
        let d = diff.norm();
        let g = if d > 0.0 { diff * (r[0] / d) } else { Point2::zeros() };
        Some(DVector::from_column_slice(g.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_curve_is_a_segment() {
        let c = BernsteinCurve2D::new(&[Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]).unwrap();
        let (p, d) = c.eval(0.5).unwrap();
        assert_relative_eq!(p, Point2::new(0.5, 0.5));
        assert_relative_eq!(d, Point2::new(1.0, 1.0));
    }

    #[test]
    fn endpoints_interpolate_control_polygon() {
        let pts = [
            Point2::new(0.3, -1.0),
            Point2::new(1.0, 2.0),
            Point2::new(2.0, -2.0),
            Point2::new(3.0, 0.5),
        ];
        let c = BernsteinCurve2D::new(&pts).unwrap();
        assert_relative_eq!(c.eval(0.0).unwrap().0, pts[0], epsilon = 1e-14);
        assert_relative_eq!(c.eval(1.0).unwrap().0, pts[3], epsilon = 1e-12);
        assert!(c.eval(1.5).is_err());
        assert!(c.eval(-0.1).is_err());
    }

    #[test]
    fn characteristic_matrix_of_cubic() {
        let m = characteristic_matrix(3);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                -3.0, 3.0, 0.0, 0.0, //
                3.0, -6.0, 3.0, 0.0, //
                -1.0, 3.0, -3.0, 1.0,
            ],
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn segment_projection() {
        let c = BernsteinCurve2D::new(&[Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)]).unwrap();
        assert_relative_eq!(
            project_bernstein(&Point2::new(1.0, 5.0), &c),
            Point2::new(1.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn points_on_curve_project_to_themselves() {
        let c = BernsteinCurve2D::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 2.0),
            Point2::new(2.0, -1.0),
            Point2::new(3.0, 1.0),
        ])
        .unwrap();
        for k in 0..20 {
            let t = k as f64 / 19.0;
            let on = c.eval(t).unwrap().0;
            assert!((c.project_point(&on) - on).norm() < 1e-9);
        }
    }

    #[test]
    fn fit_recovers_exact_curve() {
        let truth = BernsteinCurve2D::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 3.0),
            Point2::new(2.0, 0.0),
        ])
        .unwrap();
        let samples: Vec<(f64, Point2)> = (0..15)
            .map(|k| {
                let t = k as f64 / 14.0;
                (t, truth.eval(t).unwrap().0)
            })
            .collect();
        let fitted = BernsteinCurve2D::fit(&samples, 2).unwrap();
        for (a, b) in fitted.control_points().iter().zip(truth.control_points()) {
            assert_relative_eq!(*a, b, epsilon = 1e-10);
        }
        assert!(BernsteinCurve2D::fit(&samples[..2], 2).is_err());
    }
}
