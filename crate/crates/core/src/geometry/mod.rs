//! Projection primitives and set algebra.
//!
//! Every constraint set a solver touches implements [`ProjectableSet`]: a membership
//! test plus the Euclidean projection `Π(p) = argmin_{s ∈ S} ‖s − p‖`. Non-convex sets
//! (the exterior of a polygon, an annulus with a positive inner radius) are allowed;
//! their projections break ties deterministically.

mod bernstein;
mod polygon;
mod sets;

use std::fmt;

use nalgebra::DVector;
use thiserror::Error;

pub use bernstein::{project_bernstein, BernsteinCurve2D};
pub use polygon::{
    c_obstacle, minkowski_sum, project_polygon, ConvexPolygon2D, Footprint, MinkowskiObstacle2D,
    ObstacleMode, Point2, PolygonMode, PolygonSet,
};
pub use sets::{
    AffineSlabSet, BoxSet, QuadricAnnulusSet, ReplicatedSet, SecondOrderConeSet, SingletonSet,
    WholeSpace,
};

/// Absolute membership tolerance used when a set is not given one explicitly.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("normal vector must be nonzero")]
    ZeroNormal,
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterOutOfDomain(f64),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("non-finite coordinates")]
    NonFinite,
}

/// A closed set equipped with a membership test and a Euclidean projection.
pub trait ProjectableSet: fmt::Debug + Send + Sync {
    /// Ambient dimension, or `None` for sets that adapt to their argument.
    fn dim(&self) -> Option<usize>;

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError>;

    fn contains_within(&self, p: &DVector<f64>, tol: f64) -> bool;

    fn tolerance(&self) -> f64 {
        DEFAULT_TOL
    }

    fn contains(&self, p: &DVector<f64>) -> bool {
        self.contains_within(p, self.tolerance())
    }

    fn is_convex(&self) -> bool;

    /// Plain-constraint encoding of the set: a residual `h(p)` with `h(p) = 0` exactly
    /// when `p` belongs to the set (hinge-clamped inequalities). `None` when the set
    /// has no such encoding.
    fn violation(&self, _p: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// `∇h(p)ᵀ r` for the residual returned by [`ProjectableSet::violation`].
    fn violation_vjp(&self, _p: &DVector<f64>, _r: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), GeometryError> {
    if expected == got {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch { expected, got })
    }
}

/// Projects onto a box; free-function form of [`BoxSet::project`].
pub fn project_box(p: &DVector<f64>, set: &BoxSet) -> Result<DVector<f64>, GeometryError> {
    set.project(p)
}

pub fn project_affine_slab(
    p: &DVector<f64>,
    set: &AffineSlabSet,
) -> Result<DVector<f64>, GeometryError> {
    set.project(p)
}

pub fn project_quadric_annulus(
    p: &DVector<f64>,
    set: &QuadricAnnulusSet,
) -> Result<DVector<f64>, GeometryError> {
    set.project(p)
}

/// Projects `p = (x, t)` onto the second-order cone `‖x‖ ≤ t`.
pub fn project_soc(p: &DVector<f64>) -> DVector<f64> {
    sets::soc_projection(p)
}
