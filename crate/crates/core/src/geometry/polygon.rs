//! Convex polygons, their projections and Minkowski sums.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector2};

use super::{check_dim, GeometryError, ProjectableSet, DEFAULT_TOL};

pub type Point2 = Vector2<f64>;

fn cross(a: &Point2, b: &Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A strictly convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon2D {
    vertices: Vec<Point2>,
}

impl ConvexPolygon2D {
    /// Validates and stores the vertex cycle. Consecutive duplicates are dropped; the
    /// remaining vertices must form a strictly convex, counterclockwise polygon.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut dedup: Vec<Point2> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if dedup.last().is_none_or(|last| (last - v).norm() > 1e-12) {
                dedup.push(v);
            }
        }
        while dedup.len() > 1 && (dedup[0] - dedup[dedup.len() - 1]).norm() <= 1e-12 {
            dedup.pop();
        }
        let n = dedup.len();
        if n < 3 {
            return Err(GeometryError::DegeneratePolygon(format!(
                "{n} distinct vertices, need at least 3"
            )));
        }
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = dedup[(i + 1) % n] - dedup[i];
            let e1 = dedup[(i + 2) % n] - dedup[(i + 1) % n];
            let c = cross(&e0, &e1);
            if c <= 1e-12 * e0.norm() * e1.norm() {
                return Err(GeometryError::DegeneratePolygon(format!(
                    "vertex {} is not a strict counterclockwise turn",
                    (i + 1) % n
                )));
            }
            turning += c.atan2(e0.dot(&e1));
        }
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(GeometryError::DegeneratePolygon(
                "vertex cycle winds more than once".into(),
            ));
        }
        Ok(Self { vertices: dedup })
    }

    /// Drops vertices that are (numerically) collinear with their neighbours, then
    /// validates. Used on the output of constructions that may create flat vertices.
    fn from_loose_cycle(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        let scale = vertices
            .iter()
            .map(|v| v.abs().max())
            .fold(1.0_f64, f64::max);
        loop {
            let n = vertices.len();
            if n < 3 {
                break;
            }
            let flat = (0..n).find(|&i| {
                let prev = vertices[(i + n - 1) % n];
                let next = vertices[(i + 1) % n];
                let e0 = vertices[i] - prev;
                let e1 = next - vertices[i];
                e0.norm() <= 1e-12 * scale || cross(&e0, &e1) <= 1e-12 * e0.norm() * e1.norm()
            });
            match flat {
                Some(i) => {
                    vertices.remove(i);
                }
                None => break,
            }
        }
        Self::new(vertices)
    }

    /// An axis-aligned rectangle rotated by `angle` (radians) about its center.
    pub fn rectangle(
        center: Point2,
        half_width: f64,
        half_height: f64,
        angle: f64,
    ) -> Result<Self, GeometryError> {
        let (s, c) = angle.sin_cos();
        let corners = [
            (-half_width, -half_height),
            (half_width, -half_height),
            (half_width, half_height),
            (-half_width, half_height),
        ];
        Self::new(
            corners
                .iter()
                .map(|&(x, y)| center + Point2::new(c * x - s * y, s * x + c * y))
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| cross(&a, &b)).sum::<f64>()
    }

    pub fn centroid(&self) -> Point2 {
        let a = self.area();
        let sum = self
            .edges()
            .fold(Point2::zeros(), |acc, (p, q)| acc + (p + q) * cross(&p, &q));
        sum / (6.0 * a)
    }

    pub fn translated(&self, offset: Point2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
        }
    }

    /// Point reflection through the origin, `{−x : x ∈ P}`. Orientation is preserved.
    pub fn reflected(&self) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| -v).collect(),
        }
    }

    fn outward_normal(a: &Point2, b: &Point2) -> Point2 {
        let e = b - a;
        Point2::new(e.y, -e.x) / e.norm()
    }

    /// Largest signed edge-line distance `max_i n_iᵀ(p − v_i)` and the first edge
    /// achieving it. Non-positive exactly when `p` lies in the closed polygon.
    fn max_edge_offset(&self, p: &Point2) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, (a, b)) in self.edges().enumerate() {
            let s = Self::outward_normal(&a, &b).dot(&(p - a));
            if s > best.0 {
                best = (s, i);
            }
        }
        best
    }

    fn nearest_boundary_point(&self, p: &Point2) -> Point2 {
        let mut best = (f64::INFINITY, *p);
        for (a, b) in self.edges() {
            let e = b - a;
            let t = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            let q = a + e * t;
            let d = (p - q).norm_squared();
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, p: &Point2) -> f64 {
        let (s, _) = self.max_edge_offset(p);
        if s <= 0.0 {
            s
        } else {
            (p - self.nearest_boundary_point(p)).norm()
        }
    }

    pub fn contains_point(&self, p: &Point2, tol: f64) -> bool {
        self.max_edge_offset(p).0 <= tol
    }
}

/// Whether a polygon projection targets the polygon itself or its closed exterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolygonMode {
    Onto,
    OutOf,
}

/// Nearest point of the closed polygon (`Onto`) or of its closed exterior (`OutOf`).
/// Ties go to the lowest edge index.
pub fn project_polygon(p: &Point2, poly: &ConvexPolygon2D, mode: PolygonMode) -> Point2 {
    let (offset, edge) = poly.max_edge_offset(p);
    match mode {
        PolygonMode::Onto if offset <= 0.0 => *p,
        PolygonMode::Onto => poly.nearest_boundary_point(p),
        PolygonMode::OutOf if offset >= 0.0 => *p,
        PolygonMode::OutOf => {
            // For an interior point the nearest supporting line's foot lies on its edge.
            let a = poly.vertices[edge];
            let b = poly.vertices[(edge + 1) % poly.len()];
            let n = ConvexPolygon2D::outward_normal(&a, &b);
            p - n * offset
        }
    }
}

fn point2(p: &DVector<f64>) -> Result<Point2, GeometryError> {
    check_dim(2, p.len())?;
    Ok(Point2::new(p[0], p[1]))
}

fn polygon_violation(poly: &ConvexPolygon2D, mode: PolygonMode, p: &Point2) -> f64 {
    let sd = poly.signed_distance(p);
    match mode {
        PolygonMode::Onto => sd.max(0.0),
        PolygonMode::OutOf => sd.min(0.0),
    }
}

fn polygon_violation_grad(poly: &ConvexPolygon2D, mode: PolygonMode, p: &Point2) -> Point2 {
    let (offset, edge) = poly.max_edge_offset(p);
    match mode {
        PolygonMode::Onto if offset > 0.0 => {
            let q = poly.nearest_boundary_point(p);
            let d = (p - q).norm();
            if d > 0.0 {
                (p - q) / d
            } else {
                Point2::zeros()
            }
        }
        PolygonMode::OutOf if offset < 0.0 => {
            let a = poly.vertices[edge];
            let b = poly.vertices[(edge + 1) % poly.len()];
            ConvexPolygon2D::outward_normal(&a, &b)
        }
        _ => Point2::zeros(),
    }
}

/// A polygon used as a constraint set in either projection mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonSet {
    pub polygon: ConvexPolygon2D,
    pub mode: PolygonMode,
    tol: f64,
}

impl PolygonSet {
    pub fn new(polygon: ConvexPolygon2D, mode: PolygonMode) -> Self {
        Self {
            polygon,
            mode,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

impl ProjectableSet for PolygonSet {
    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let q = project_polygon(&point2(p)?, &self.polygon, self.mode);
        Ok(DVector::from_column_slice(q.as_slice()))
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        let Ok(q) = point2(p) else { return false };
        match self.mode {
            PolygonMode::Onto => self.polygon.contains_point(&q, tol),
            PolygonMode::OutOf => self.polygon.max_edge_offset(&q).0 >= -tol,
        }
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        self.mode == PolygonMode::Onto
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        let q = point2(p).ok()?;
        Some(DVector::from_element(1, polygon_violation(&self.polygon, self.mode, &q)))
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        let q = point2(p).ok()?;
        let g = polygon_violation_grad(&self.polygon, self.mode, &q) * r[0];
        Some(DVector::from_column_slice(g.as_slice()))
    }
}

/// Exact Minkowski sum of two convex polygons by merging their edge sequences in
/// angular order. The result has at most `|a| + |b|` vertices.
pub fn minkowski_sum(
    a: &ConvexPolygon2D,
    b: &ConvexPolygon2D,
) -> Result<ConvexPolygon2D, GeometryError> {
    fn rotate_to_lowest(v: &[Point2]) -> Vec<Point2> {
        let start = (0..v.len())
            .min_by(|&i, &j| {
                (v[i].y, v[i].x)
                    .partial_cmp(&(v[j].y, v[j].x))
                    .expect("finite vertices")
            })
            .unwrap_or(0);
        v[start..].iter().chain(v[..start].iter()).copied().collect()
    }
    let p = rotate_to_lowest(&a.vertices);
    let q = rotate_to_lowest(&b.vertices);
    let (n, m) = (p.len(), q.len());
    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(p[i % n] + q[j % m]);
        let ep = p[(i + 1) % n] - p[i % n];
        let eq = q[(j + 1) % m] - q[j % m];
        let c = if i == n {
            -1.0
        } else if j == m {
            1.0
        } else {
            cross(&ep, &eq)
        };
        if c >= 0.0 {
            i += 1;
        }
        if c <= 0.0 {
            j += 1;
        }
    }
    ConvexPolygon2D::from_loose_cycle(out)
}

/// The shape of a translating robot relative to its reference point.
#[derive(Debug, Clone, PartialEq)]
pub enum Footprint {
    /// A point robot, possibly offset from the reference point.
    Point(Point2),
    Polygon(ConvexPolygon2D),
}

impl Footprint {
    /// `self ⊕ other`; a point footprint is a pure translation.
    pub fn sum_with(&self, other: &ConvexPolygon2D) -> Result<ConvexPolygon2D, GeometryError> {
        match self {
            Footprint::Point(offset) => Ok(other.translated(*offset)),
            Footprint::Polygon(poly) => minkowski_sum(poly, other),
        }
    }

    pub fn reflected(&self) -> Self {
        match self {
            Footprint::Point(offset) => Footprint::Point(-offset),
            Footprint::Polygon(poly) => Footprint::Polygon(poly.reflected()),
        }
    }

    /// The footprint placed with its reference point at `center`.
    pub fn placed_at(&self, center: Point2) -> Option<ConvexPolygon2D> {
        match self {
            Footprint::Point(_) => None,
            Footprint::Polygon(poly) => Some(poly.translated(center)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObstacleMode {
    KeepOut,
    KeepIn,
}

/// A configuration-space polygon for a translating robot's reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiObstacle2D {
    pub sum: ConvexPolygon2D,
    pub mode: ObstacleMode,
    tol: f64,
}

impl MinkowskiObstacle2D {
    pub fn new(sum: ConvexPolygon2D, mode: ObstacleMode) -> Self {
        Self {
            sum,
            mode,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn polygon_mode(&self) -> PolygonMode {
        match self.mode {
            ObstacleMode::KeepOut => PolygonMode::OutOf,
            ObstacleMode::KeepIn => PolygonMode::Onto,
        }
    }

    /// Whether a robot with its reference point at `p` overlaps the obstacle.
    pub fn collides(&self, p: &Point2) -> bool {
        self.sum.contains_point(p, 0.0)
    }
}

/// Configuration-space obstacle `obstacle ⊕ (−robot)`: the robot (vertices relative
/// to its reference point) overlaps the obstacle exactly when its reference point lies
/// in the returned polygon.
pub fn c_obstacle(
    robot: &Footprint,
    obstacle: &ConvexPolygon2D,
) -> Result<MinkowskiObstacle2D, GeometryError> {
    let sum = robot.reflected().sum_with(obstacle)?;
    Ok(MinkowskiObstacle2D::new(sum, ObstacleMode::KeepOut))
}

impl ProjectableSet for MinkowskiObstacle2D {
    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let q = project_polygon(&point2(p)?, &self.sum, self.polygon_mode());
        Ok(DVector::from_column_slice(q.as_slice()))
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        let Ok(q) = point2(p) else { return false };
        match self.mode {
            ObstacleMode::KeepIn => self.sum.contains_point(&q, tol),
            ObstacleMode::KeepOut => self.sum.max_edge_offset(&q).0 >= -tol,
        }
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        self.mode == ObstacleMode::KeepIn
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        let q = point2(p).ok()?;
        Some(DVector::from_element(
            1,
            polygon_violation(&self.sum, self.polygon_mode(), &q),
        ))
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        let q = point2(p).ok()?;
        let g = polygon_violation_grad(&self.sum, self.polygon_mode(), &q) * r[0];
        Some(DVector::from_column_slice(g.as_slice()))
    }
}
