//! Radial doubly complementary media for time-harmonic Maxwell equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`]: normalized spherical Bessel functions, vector spherical
//!   harmonics and quadrature rules.
//! * [`transform`]: push-forwards under Kelvin inversions and dilations, and
//!   the construction of doubly complementary layered media.
//! * [`media`]: layered radial media with loss and the dissipated power.
//! * [`solver`]: per-mode transmission solves, field assembly and norms.
//! * [`resonance`]: loss sweeps, blow-up classification and related checks.
//!
//! Units follow the usual convention `exp(-iωt)`, so Maxwell's equations read
//! `∇×E = iωμH`, `∇×H = -iωεE + J`.

// guards like `!(x > 0.0)` are written that way to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod media;
pub mod resonance;
pub mod solver;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Plain real 3-vector.
pub type Vec3 = [f64; 3];
/// Complex 3-vector.
pub type CVec3 = [Complex64; 3];
