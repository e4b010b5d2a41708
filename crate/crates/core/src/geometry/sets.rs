use std::sync::Arc;

use nalgebra::DVector;

use super::{check_dim, GeometryError, ProjectableSet, DEFAULT_TOL};

/// The whole space `Rⁿ`; used as the domain of unconstrained problems.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WholeSpace;

impl ProjectableSet for WholeSpace {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        Ok(p.clone())
    }

    fn contains_within(&self, p: &DVector<f64>, _tol: f64) -> bool {
        p.iter().all(|v| v.is_finite())
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::zeros(p.len()))
    }

    fn violation_vjp(&self, p: &DVector<f64>, _r: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::zeros(p.len()))
    }
}

/// Componentwise bounds `l ≤ x ≤ u`. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
    tol: f64,
}

impl BoxSet {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, GeometryError> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(GeometryError::InvalidBounds("empty box".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(GeometryError::InvalidBounds(
                "lower bound exceeds upper bound".into(),
            ));
        }
        Ok(Self {
            lower,
            upper,
            tol: DEFAULT_TOL,
        })
    }

    /// The same scalar bounds in every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, GeometryError> {
        Self::new(
            DVector::from_element(dim, lower),
            DVector::from_element(dim, upper),
        )
    }

    /// The weighted infinity-norm ball `‖W(x − center)‖_∞ ≤ radius` with diagonal
    /// positive weights, which is a box after rescaling each axis.
    pub fn weighted_inf_ball(
        center: &DVector<f64>,
        weights: &DVector<f64>,
        radius: f64,
    ) -> Result<Self, GeometryError> {
        check_dim(center.len(), weights.len())?;
        if radius < 0.0 || weights.iter().any(|w| *w <= 0.0) {
            return Err(GeometryError::InvalidBounds(
                "weights must be positive and radius nonnegative".into(),
            ));
        }
        let half = weights.map(|w| radius / w);
        Self::new(center - &half, center + &half)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
}

impl ProjectableSet for BoxSet {
    fn dim(&self) -> Option<usize> {
        Some(self.lower.len())
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        check_dim(self.lower.len(), p.len())?;
        Ok(DVector::from_iterator(
            p.len(),
            p.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(x, (l, u))| x.max(*l).min(*u)),
        ))
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.len() == self.lower.len()
            && p.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol)
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.lower.len() {
            return None;
        }
        let mut h = DVector::zeros(2 * p.len());
        for i in 0..p.len() {
            h[2 * i] = (p[i] - self.lower[i]).min(0.0);
            h[2 * i + 1] = (self.upper[i] - p[i]).min(0.0);
        }
        Some(h)
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.lower.len() || r.len() != 2 * p.len() {
            return None;
        }
        let mut out = DVector::zeros(p.len());
        for i in 0..p.len() {
            if p[i] < self.lower[i] {
                out[i] += r[2 * i];
            }
            if p[i] > self.upper[i] {
                out[i] -= r[2 * i + 1];
            }
        }
        Some(out)
    }
}

/// The slab `l ≤ aᵀx ≤ u`; a hyperplane when `l = u`, a halfspace when one bound is
/// infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSlabSet {
    normal: DVector<f64>,
    lower: f64,
    upper: f64,
    norm_sq: f64,
    tol: f64,
}

impl AffineSlabSet {
    pub fn new(normal: DVector<f64>, lower: f64, upper: f64) -> Result<Self, GeometryError> {
        let norm_sq = normal.norm_squared();
        if normal.is_empty() || norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(GeometryError::ZeroNormal);
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(GeometryError::InvalidBounds(format!(
                "slab bounds [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            normal,
            lower,
            upper,
            norm_sq,
            tol: DEFAULT_TOL,
        })
    }

    /// `aᵀx ≤ upper`.
    pub fn halfspace(normal: DVector<f64>, upper: f64) -> Result<Self, GeometryError> {
        Self::new(normal, f64::NEG_INFINITY, upper)
    }

    /// `aᵀx = value`.
    pub fn hyperplane(normal: DVector<f64>, value: f64) -> Result<Self, GeometryError> {
        Self::new(normal, value, value)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }
}

impl ProjectableSet for AffineSlabSet {
    fn dim(&self) -> Option<usize> {
        Some(self.normal.len())
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        check_dim(self.normal.len(), p.len())?;
        let ax = self.normal.dot(p);
        let target = if ax > self.upper {
            self.upper
        } else if ax < self.lower {
            self.lower
        } else {
            return Ok(p.clone());
        };
        Ok(p - &self.normal * ((ax - target) / self.norm_sq))
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        if p.len() != self.normal.len() {
            return false;
        }
        let scaled_tol = tol * self.norm_sq.sqrt();
        let ax = self.normal.dot(p);
        ax >= self.lower - scaled_tol && ax <= self.upper + scaled_tol
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.normal.len() {
            return None;
        }
        let ax = self.normal.dot(p);
        let mut h = DVector::zeros(2);
        if self.lower.is_finite() {
            h[0] = (ax - self.lower).min(0.0);
        }
        if self.upper.is_finite() {
            h[1] = (self.upper - ax).min(0.0);
        }
        Some(h)
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.normal.len() || r.len() != 2 {
            return None;
        }
        let ax = self.normal.dot(p);
        let mut coeff = 0.0;
        if ax < self.lower {
            coeff += r[0];
        }
        if ax > self.upper {
            coeff -= r[1];
        }
        Some(&self.normal * coeff)
    }
}

/// The quadric shell `l ≤ ½‖x − c‖² ≤ u`. With `l = 0` it is the ball of radius `√(2u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricAnnulusSet {
    center: DVector<f64>,
    lower: f64,
    upper: f64,
    tol: f64,
}

impl QuadricAnnulusSet {
    pub fn new(center: DVector<f64>, lower: f64, upper: f64) -> Result<Self, GeometryError> {
        if center.is_empty() {
            return Err(GeometryError::InvalidBounds("empty center".into()));
        }
        if !(0.0..=upper).contains(&lower) || upper.is_nan() {
            return Err(GeometryError::InvalidBounds(format!(
                "annulus levels must satisfy 0 ≤ l ≤ u, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            center,
            lower,
            upper,
            tol: DEFAULT_TOL,
        })
    }

    /// The shell between two radii.
    pub fn from_radii(center: DVector<f64>, inner: f64, outer: f64) -> Result<Self, GeometryError> {
        Self::new(center, 0.5 * inner * inner, 0.5 * outer * outer)
    }

    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self, GeometryError> {
        Self::from_radii(center, 0.0, radius)
    }

    /// A circle (sphere) of exactly the given radius.
    pub fn sphere(center: DVector<f64>, radius: f64) -> Result<Self, GeometryError> {
        Self::from_radii(center, radius, radius)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn inner_radius(&self) -> f64 {
        (2.0 * self.lower).sqrt()
    }

    pub fn outer_radius(&self) -> f64 {
        (2.0 * self.upper).sqrt()
    }
}

impl ProjectableSet for QuadricAnnulusSet {
    fn dim(&self) -> Option<usize> {
        Some(self.center.len())
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        check_dim(self.center.len(), p.len())?;
        let offset = p - &self.center;
        let r = offset.norm();
        let (r_in, r_out) = (self.inner_radius(), self.outer_radius());
        if r > r_out {
            Ok(&self.center + offset * (r_out / r))
        } else if r < r_in {
            if r == 0.0 {
                // Every point of the inner sphere is nearest; pick +e₁.
                let mut out = self.center.clone();
                out[0] += r_in;
                Ok(out)
            } else {
                Ok(&self.center + offset * (r_in / r))
            }
        } else {
            Ok(p.clone())
        }
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        if p.len() != self.center.len() {
            return false;
        }
        let r = (p - &self.center).norm();
        r >= self.inner_radius() - tol && r <= self.outer_radius() + tol
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        self.lower == 0.0
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.center.len() {
            return None;
        }
        let r = (p - &self.center).norm();
        Some(DVector::from_vec(vec![
            (r - self.inner_radius()).min(0.0),
            (self.outer_radius() - r).min(0.0),
        ]))
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.center.len() || r.len() != 2 {
            return None;
        }
        let offset = p - &self.center;
        let dist = offset.norm();
        if dist == 0.0 {
            return Some(DVector::zeros(p.len()));
        }
        let mut coeff = 0.0;
        if dist < self.inner_radius() {
            coeff += r[0];
        }
        if dist > self.outer_radius() {
            coeff -= r[1];
        }
        Some(offset * (coeff / dist))
    }
}

/// The second-order cone `{(x, t) : ‖x‖ ≤ t}` in the dimension of its argument; the
/// last coordinate is `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderConeSet {
    tol: f64,
}

impl Default for SecondOrderConeSet {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL }
    }
}

impl SecondOrderConeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

pub(crate) fn soc_projection(p: &DVector<f64>) -> DVector<f64> {
    let n = p.len();
    let t = p[n - 1];
    let x = p.rows(0, n - 1);
    let norm = x.norm();
    if norm <= t {
        p.clone()
    } else if norm <= -t {
        DVector::zeros(n)
    } else {
        let scale = 0.5 * (norm + t);
        let mut out = DVector::zeros(n);
        out.rows_mut(0, n - 1).copy_from(&(x * (scale / norm)));
        out[n - 1] = scale;
        out
    }
}

impl ProjectableSet for SecondOrderConeSet {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        if p.len() < 2 {
            return Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: p.len(),
            });
        }
        Ok(soc_projection(p))
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        let n = p.len();
        n >= 2 && p.rows(0, n - 1).norm() <= p[n - 1] + tol
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        let n = p.len();
        (n >= 2).then(|| DVector::from_element(1, (p[n - 1] - p.rows(0, n - 1).norm()).min(0.0)))
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        let n = p.len();
        if n < 2 || r.len() != 1 {
            return None;
        }
        let x = p.rows(0, n - 1);
        let norm = x.norm();
        let mut out = DVector::zeros(n);
        if norm > p[n - 1] {
            if norm > 0.0 {
                out.rows_mut(0, n - 1).copy_from(&(x * (-r[0] / norm)));
            }
            out[n - 1] = r[0];
        }
        Some(out)
    }
}

/// A single point; hosts equality constraints `h(x) = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingletonSet {
    value: DVector<f64>,
    tol: f64,
}

impl SingletonSet {
    pub fn new(value: DVector<f64>) -> Self {
        Self {
            value,
            tol: DEFAULT_TOL,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DVector::zeros(dim))
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn value(&self) -> &DVector<f64> {
        &self.value
    }
}

impl ProjectableSet for SingletonSet {
    fn dim(&self) -> Option<usize> {
        Some(self.value.len())
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        check_dim(self.value.len(), p.len())?;
        Ok(self.value.clone())
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.len() == self.value.len() && (p - &self.value).amax() <= tol
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        (p.len() == self.value.len()).then(|| p - &self.value)
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        (p.len() == self.value.len() && r.len() == p.len()).then(|| r.clone())
    }
}

/// Cartesian power `S × S × … × S`: the argument is split into equal consecutive
/// blocks and each block is projected onto `S` independently.
#[derive(Debug, Clone)]
pub struct ReplicatedSet {
    inner: Arc<dyn ProjectableSet>,
    block: usize,
    copies: usize,
}

impl ReplicatedSet {
    pub fn new(
        inner: Arc<dyn ProjectableSet>,
        block: usize,
        copies: usize,
    ) -> Result<Self, GeometryError> {
        if let Some(d) = inner.dim() {
            check_dim(d, block)?;
        }
        if block == 0 {
            return Err(GeometryError::InvalidBounds("zero block size".into()));
        }
        Ok(Self {
            inner,
            block,
            copies,
        })
    }

    pub fn inner(&self) -> &Arc<dyn ProjectableSet> {
        &self.inner
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    fn split<'a>(&self, p: &'a DVector<f64>) -> impl Iterator<Item = DVector<f64>> + 'a {
        p.as_slice().chunks(self.block).map(DVector::from_column_slice)
    }
}

impl ProjectableSet for ReplicatedSet {
    fn dim(&self) -> Option<usize> {
        Some(self.block * self.copies)
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        check_dim(self.block * self.copies, p.len())?;
        let mut out = DVector::zeros(p.len());
        for (k, chunk) in self.split(p).enumerate() {
            let proj = self.inner.project(&chunk)?;
            out.rows_mut(k * self.block, self.block).copy_from(&proj);
        }
        Ok(out)
    }

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.len() == self.block * self.copies
            && self.split(p).all(|c| self.inner.contains_within(&c, tol))
    }

    fn tolerance(&self) -> f64 {
        self.inner.tolerance()
    }

    fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }

    fn violation(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.block * self.copies {
            return None;
        }
        let parts: Option<Vec<DVector<f64>>> = self.split(p).map(|c| self.inner.violation(&c)).collect();
        let parts = parts?;
        let total: usize = parts.iter().map(|h| h.len()).sum();
        let mut out = DVector::zeros(total);
        let mut offset = 0;
        for h in parts {
            out.rows_mut(offset, h.len()).copy_from(&h);
            offset += h.len();
        }
        Some(out)
    }

    fn violation_vjp(&self, p: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.block * self.copies || self.copies == 0 || r.len() % self.copies != 0 {
            return None;
        }
        let h = r.len() / self.copies;
        let mut out = DVector::zeros(p.len());
        for (k, chunk) in self.split(p).enumerate() {
            let rk = r.rows(k * h, h).into_owned();
            let g = self.inner.violation_vjp(&chunk, &rk)?;
            out.rows_mut(k * self.block, self.block).copy_from(&g);
        }
        Some(out)
    }
}
