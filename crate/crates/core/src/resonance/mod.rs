//! Loss sweeps and the localized-resonance analysis built on them.

pub mod checks;
pub mod classify;
pub mod sweep;

pub use checks::{
    free_field_norms_sq, inequality_shape_check, mode_stability, random_free_fields, resonant_window_scaling,
    three_sphere_check, FreeField, InequalityReport, StabilityReport, ThreeSphereReport, WindowScaling,
};
pub use classify::{
    cauchy_solvability, classify_blowup, critical_radius_scan, fit_power_exponent, invisibility_check, lsq_slope,
    predicted_exponent, source_regular_coefficients, windowed_maxima, Classification, CoefficientTail,
    CriticalScan, CriticalityReport, BLOWUP_THRESHOLD,
};
pub use sweep::{check_ladder, delta_sweep, excluding, SweepProblem, SweepRegions, SweepResult, SweepRow};
