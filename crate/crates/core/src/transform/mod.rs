//! Transformation-optics algebra for radial maps.
//!
//! Material tensors push forward as `T_*A = ∇T A ∇Tᵀ / det ∇T`, fields as
//! `T*E = ∇T^{-T} E`, and current densities as `∇T j / det ∇T`.

pub mod construct;
pub mod maps;
pub mod tensor;

pub use construct::{
    build_dc_medium, build_dc_medium_with, build_tilde_source, sample_annulus, verify_complementary, verify_dcm,
    ConstructionResiduals, DcmConstruction, DcmParams, MediumRegion, RegionTable, ResidualReport,
};
pub use maps::ReflectionMap;
pub use tensor::{
    push_forward_current, push_forward_field, push_forward_point_current, push_forward_surface_current,
    push_forward_tensor, ConformalRadialTensor, FnTensor, Side, TensorField,
};
