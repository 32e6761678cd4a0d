//! Pseudohermitian calculus on the Heisenberg chart.
//!
//! The crate works on `R^3` with the Heisenberg group structure and the
//! standard contact form `Θ = dz + x dy - y dx`. A compatible CR structure
//! is encoded by a complex deformation tensor `φ` with `|φ| < 1`; from it
//! the library computes the unitary coframe, pseudohermitian torsion and
//! connection form, the Tanaka-Webster scalar curvature, the sublaplacian
//! and conformal changes of contact form — all with exact jets, each backed
//! by an independent finite-difference or structure-equation oracle.
//!
//! On top of the calculus sit two constructions:
//!
//! * [`gluing`] — a `C²` logarithmic cutoff interpolates `(φ, Θ)` with a
//!   curvature-matched spherical structure near the origin, and a study
//!   tabulates the `C⁰` convergence of the glued curvature.
//! * [`yamabe`] — a discretized CR Yamabe quotient on a box with zero
//!   boundary data, minimized by projected gradient descent, used to
//!   compare the quotient of the glued structures against the base one.
//!
//! The `webster` binary exposes the verification suites and both studies.

pub mod cli;
pub mod error;
pub mod forms;
pub mod gluing;
pub mod hgroup;
pub mod phcalc;
pub mod yamabe;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
