//! Special functions: normalized spherical Bessel functions, vector
//! spherical harmonics, and quadrature rules.

pub mod bessel;
pub mod harmonics;
pub mod quadrature;
pub mod scaled;

pub use bessel::{eval_radial_pair, radial, NormalizedRadialPair, RadialKind, ScaledPair};
pub use harmonics::{eval_angular_basis, AngularBasisSample, AngularTable};
pub use scaled::Scaled;
