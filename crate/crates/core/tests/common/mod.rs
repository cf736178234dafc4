#![allow(dead_code)]

use dcm_core::media::{LayeredMedium, RadialLayer};
use dcm_core::transform::ConformalRadialTensor;
use dcm_core::{CVec3, Complex64, Vec3};

/// Vacuum everywhere, with the layer radii of the unit construction.
pub fn trivial_medium(omega: f64) -> LayeredMedium {
    let one = ConformalRadialTensor::constant(1.0);
    let cuts = [0.0, 0.125, 0.5, 1.0, 2.0, f64::INFINITY];
    let layers = cuts
        .windows(2)
        .enumerate()
        .map(|(i, w)| RadialLayer::new(w[0], w[1], one, one, i == 2))
        .collect();
    LayeredMedium::new(layers, 0.5, 1.0, 2.0, 2.0, omega, 1.0).unwrap()
}

/// Free-space field of an electric point current `j` at `x0`:
/// `E = iω (I + ∇∇/k²) g j`, `H = ∇g × j`, `g = e^{ikR}/(4πR)`, `k = ω`.
pub fn free_dipole(omega: f64, x0: Vec3, j: CVec3, x: Vec3) -> (CVec3, CVec3) {
    let k = omega;
    let d = [x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let rh = [d[0] / r, d[1] / r, d[2] / r];
    let i = Complex64::i();
    let g = (i * k * r).exp() / (4.0 * std::f64::consts::PI * r);
    let kr = Complex64::new(k * r, 0.0);
    let a = g * (1.0 + i / kr - 1.0 / (kr * kr));
    let b = g * (-1.0 - 3.0 * i / kr + 3.0 / (kr * kr));
    let rj = rh[0] * j[0] + rh[1] * j[1] + rh[2] * j[2];
    let mut e = [Complex64::new(0.0, 0.0); 3];
    for c in 0..3 {
        e[c] = i * omega * (a * j[c] + b * rh[c] * rj);
    }
    let gp = g * (i * k - 1.0 / r);
    let h = [
        gp * (rh[1] * j[2] - rh[2] * j[1]),
        gp * (rh[2] * j[0] - rh[0] * j[2]),
        gp * (rh[0] * j[1] - rh[1] * j[0]),
    ];
    (e, h)
}

/// Piecewise-constant medium with interior interfaces `cuts`; the first three
/// serve as `r1 < r2 < r3`. `coef[i] = (ε, μ)` of layer `i`.
pub fn constant_medium(cuts: &[f64], coef: &[(f64, f64)], omega: f64) -> LayeredMedium {
    assert_eq!(coef.len(), cuts.len() + 1);
    let mut radii = vec![0.0];
    radii.extend_from_slice(cuts);
    radii.push(f64::INFINITY);
    let layers = radii
        .windows(2)
        .zip(coef)
        .map(|(w, &(e, m))| {
            RadialLayer::new(
                w[0],
                w[1],
                ConformalRadialTensor::constant(e),
                ConformalRadialTensor::constant(m),
                false,
            )
        })
        .collect();
    LayeredMedium::new(layers, cuts[0], cuts[1], cuts[2], cuts[2], omega, 1.0).unwrap()
}

/// Halton point `k` in the unit cube for prime bases 2, 3, 5.
pub fn halton(k: usize) -> [f64; 3] {
    let radical = |mut i: usize, b: usize| {
        let (mut f, mut x) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            x += f * (i % b) as f64;
            i /= b;
        }
        x
    };
    [radical(k, 2), radical(k, 3), radical(k, 5)]
}
