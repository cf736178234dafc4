//! Per-mode solution of the radiating transmission problem in layered
//! radial media, field assembly and norms.
//!
//! Fields are expanded as
//!
//! ```text
//! E = Σ e_r Y x̂ + e_U U + e_V V,     H = Σ h_r Y x̂ + h_U U + h_V V,
//! ```
//!
//! and every `(n, m, pol)` reduces to a 2×2 first-order system for the
//! tangential traces, which are continuous across material interfaces.

pub mod basis;
pub mod field;
pub mod ode;
pub mod solve;
pub mod source;

use serde::{Deserialize, Serialize};

pub use basis::{fundamental_pair, BasisOptions, LayerBasis, Position};
pub use field::{field_eval, field_eval_sided, mode_norm_sq, norm_l2, norm_l2_diff, norm_l2_sq, FieldSample, FieldSolution, ModeCoefficients, Truncation};
pub use solve::{
    extend_limit_fields, solve_effective, solve_full, solve_full_cached, solve_mode, BasisCache, LayerStack, SolveOptions,
    TruncationPolicy,
};
pub use source::{CurrentFlavor, PointDipole, SphericalSource, SurfaceCurrent};

/// `TE`: electric field tangential (`E ∥ V`); `TM`: magnetic field tangential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];
}

/// Degree `n ≥ 1`, order `|m| ≤ n` and polarization of a vector mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: usize,
    pub m: i64,
    pub pol: Polarization,
}

impl ModeIndex {
    pub fn new(n: usize, m: i64, pol: Polarization) -> Self {
        ModeIndex { n, m, pol }
    }
}
