//! Heisenberg-group chart: coordinates, group law, left-invariant frames,
//! the quartic gauge, and an exact jet algebra for scalar fields.
//!
//! The chart is `R^3` with coordinates `(x, y, z)` and group law
//! `(x₁,y₁,z₁) ∘ (x₂,y₂,z₂) = (x₁+x₂, y₁+y₂, z₁+z₂+y₁x₂−x₁y₂)`.
//! Left-invariant vector fields:
//!
//! ```text
//! e̊₁ = ∂x + y ∂z,   e̊₂ = ∂y − x ∂z,   T = ∂z,
//! Z̊₁ = (e̊₁ − i e̊₂)/2,   Z̊₁̄ = (e̊₁ + i e̊₂)/2.
//! ```
//!
//! Scalar fields are immutable expression trees ([`ScalarField`]) that emit
//! exact jets at any point via truncated Taylor arithmetic in the chart
//! coordinates; frame derivatives are assembled from coordinate partials,
//! so the non-commutativity of the frame is tracked exactly. The sole
//! numerical oracle is [`fd_jet`], built from central coordinate
//! differences.

mod fd;
mod field;
mod jet;
mod taylor;

pub use fd::{fd_jet, fd_partials};
pub use field::{Coord, ScalarField, SmoothProfile};
pub use jet::{
    assemble_jet2, calibrate_kappa, commutator_defect, frame_deriv, jet2_eval, Dir, FrameDir,
    Jet1, Jet2, Partials, KAPPA,
};
pub use taylor::CJet;

use std::fmt;

/// A point of the Heisenberg chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub const ORIGIN: HPoint = HPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite() && z.is_finite());
        HPoint { x, y, z }
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Group multiplication of the Heisenberg group.
pub fn group_mul(p: HPoint, q: HPoint) -> HPoint {
    HPoint::new(
        p.x + q.x,
        p.y + q.y,
        p.z + q.z + p.y * q.x - p.x * q.y,
    )
}

/// Group inverse: `p ∘ group_inv(p)` is the origin.
pub fn group_inv(p: HPoint) -> HPoint {
    HPoint::new(-p.x, -p.y, -p.z)
}

/// Korányi gauge. Returns `(s, ρ)` with `s = (x²+y²)² + z²` and
/// `ρ = s^{1/4}`.
///
/// `s` is a polynomial (smooth everywhere); `ρ` is not smooth at the
/// origin, which is why downstream cutoffs compose with `s`.
pub fn koranyi_gauge(p: HPoint) -> (f64, f64) {
    let r2 = p.x * p.x + p.y * p.y;
    let s = r2 * r2 + p.z * p.z;
    (s, s.powf(0.25))
}
