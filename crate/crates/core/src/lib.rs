//! Constrained first-order optimization built on Euclidean projections.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: sets with closed-form (or cheap numerical) projections, polygon
//!   Minkowski sums and Bernstein curves.
//! * [`spg`]: spectral projected gradient descent with a non-monotone line search.
//! * [`alspg`]: an augmented Lagrangian outer loop over constraints of the form
//!   `g_i(x) ∈ C_i`, using SPG for the subproblems.
//! * [`ocp`]: direct-shooting optimal control, reverse-sweep Jacobian products and an
//!   iLQR baseline.
//! * [`problems`]: planar-arm IK, chance-constrained IK, pusher-slider and car
//!   obstacle-avoidance benchmark problems.

pub mod alspg;
pub mod geometry;
pub mod ocp;
pub mod problems;
pub mod spg;
