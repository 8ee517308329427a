//! Numerical construction of global solutions to the timelike eikonal
//! equation `g(∇u, ∇u) = −1` on Z²-periodic Lorentzian planes, and of the
//! foliations by timelike lines that their gradients generate.
//!
//! The pipeline mirrors the geometric construction:
//!
//! * [`metric`] evaluates periodic metrics with exact derivatives;
//! * [`geodesic`] integrates geodesics and Jacobi fields, and shoots between
//!   points;
//! * [`causal`] estimates the stable time cone from the lightlike foliations;
//! * [`maxdist`] computes Lorentzian distances and distance fields `d_p`;
//! * [`lines`] builds periodic timelike lines and rays of a given direction;
//! * [`busemann`] takes the limit of `t_i − d(p_i, ·)` along receding poles
//!   and verifies the resulting calibration and foliation.

// `!(x > 0.0)` is how NaN is made to fail input checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod busemann;
pub mod causal;
pub mod geodesic;
pub mod lines;
pub mod maxdist;
pub mod metric;
pub mod roots;
pub mod verify;

/// Points and tangent vectors of the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Euclidean cross product `a × b`.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}
