//! Scalar checks: three-sphere interpolation, damping-bound shapes,
//! resonant-window scaling and per-mode stability.

use super::classify::lsq_slope;
use super::sweep::{check_ladder, SweepResult};
use crate::media::{Annulus, LayeredMedium, RadialLayer};
use crate::solver::basis::{BasisOptions, LayerBasis, Position};
use crate::solver::{
    solve_mode, CurrentFlavor, ModeIndex, Polarization, SolveOptions, SphericalSource, SurfaceCurrent,
};
use crate::transform::ConformalRadialTensor;
use crate::{Complex64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Source-free vacuum field `Σ a (regular mode)` with columns normalized at `r = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeField {
    pub omega: f64,
    pub modes: Vec<(ModeIndex, Complex64)>,
}

/// `count` fields of `modes` random modes each with `n ≤ nmax`.
pub fn random_free_fields(count: usize, modes: usize, nmax: usize, omega: f64, seed: u64) -> Vec<FreeField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| FreeField {
            omega,
            modes: (0..modes)
                .map(|_| {
                    let n = rng.gen_range(1..=nmax);
                    let m = rng.gen_range(-(n as i64)..=n as i64);
                    let pol = if rng.gen::<bool>() { Polarization::TE } else { Polarization::TM };
                    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (ModeIndex::new(n, m, pol), a)
                })
                .collect(),
        })
        .collect()
}

/// Squared norms of single free modes over balls, memoized.
struct BallNorms {
    omega: f64,
    r_ref: f64,
    table: HashMap<(usize, Polarization, u64), f64>,
}

impl BallNorms {
    fn new(omega: f64, r_ref: f64) -> Self {
        BallNorms {
            omega,
            r_ref,
            table: HashMap::new(),
        }
    }

    fn get(&mut self, n: usize, pol: Polarization, r: f64) -> Result<f64> {
        if let Some(v) = self.table.get(&(n, pol, r.to_bits())) {
            return Ok(*v);
        }
        let one = ConformalRadialTensor::constant(1.0);
        let layer = RadialLayer::new(0.0, self.r_ref, one, one, false);
        let b = LayerBasis::build(&layer, n, pol, self.omega, 0.0, Position::Core, BasisOptions::default())?;
        let v = b.gram(0.0, r)?[0][0].re;
        self.table.insert((n, pol, r.to_bits()), v);
        Ok(v)
    }
}

/// `‖f‖²` over `B_r` for each requested radius.
pub fn free_field_norms_sq(f: &FreeField, radii: &[f64]) -> Result<Vec<f64>> {
    let mut cache = BallNorms::new(f.omega, 1.0);
    norms_with(&mut cache, f, radii)
}

fn norms_with(cache: &mut BallNorms, f: &FreeField, radii: &[f64]) -> Result<Vec<f64>> {
    // distinct modes are orthogonal on every sphere
    let mut agg: HashMap<ModeIndex, Complex64> = HashMap::new();
    for (k, a) in &f.modes {
        *agg.entry(*k).or_insert(Complex64::new(0.0, 0.0)) += a;
    }
    let mut keys: Vec<_> = agg.keys().cloned().collect();
    keys.sort();
    radii
        .iter()
        .map(|&r| {
            let mut s = 0.0;
            for k in &keys {
                s += agg[k].norm_sqr() * cache.get(k.n, k.pol, r)?;
            }
            Ok(s)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeSphereReport {
    /// Interpolation exponent `ln(R3/R2) / ln(R3/R1)`.
    pub alpha: f64,
    /// Smallest `C` valid over the ensemble.
    pub constant: f64,
    pub worst_index: usize,
}

/// Smallest `C` with `‖f‖_{B_{R2}} ≤ C ‖f‖^α_{B_{R1}} ‖f‖^{1−α}_{B_{R3}}` over `fields`.
pub fn three_sphere_check(fields: &[FreeField], r1: f64, r2: f64, r3: f64) -> Result<ThreeSphereReport> {
    if !(r1 > 0.0 && r1 <= r2 && r2 < r3) {
        return Err(Error::domain("three-sphere radii must satisfy 0 < R1 ≤ R2 < R3"));
    }
    let alpha = (r3 / r2).ln() / (r3 / r1).ln();
    let mut worst = (0.0f64, 0usize);
    let omega = fields.first().map_or(1.0, |f| f.omega);
    let mut cache = BallNorms::new(omega, r3);
    for (i, f) in fields.iter().enumerate() {
        if f.omega != omega {
            return Err(Error::domain("all fields must share one frequency"));
        }
        let v = norms_with(&mut cache, f, &[r1, r2, r3])?;
        if v[2] == 0.0 {
            continue;
        }
        // in logs: norms of high modes on small balls underflow quickly
        let c = 0.5 * (v[1].ln() - alpha * v[0].ln() - (1.0 - alpha) * v[2].ln());
        let c = c.exp();
        if c > worst.0 {
            worst = (c, i);
        }
    }
    Ok(ThreeSphereReport {
        alpha,
        constant: worst.0,
        worst_index: worst.1,
    })
}

/// Worst ratios `LHS / (δ-power · r0^{2n})` of the two damping bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// `max r3^{2n} / ((1 + ξ_n²) δ^{−2α} r0^{2n})`.
    pub first: f64,
    /// `max ξ_n² r2^{2n} / ((1 + ξ_n²) δ^{2(1−α)} r0^{2n})`.
    pub second: f64,
    pub cases: usize,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Evaluate both bounds with `ξ_n = δ^α (r3/r0)^n` over `n ≤ nmax` and the
/// ladder, in logarithms.
pub fn inequality_shape_check(
    r2: f64,
    r3: f64,
    alpha: f64,
    r0: f64,
    nmax: usize,
    ladder: &[f64],
) -> Result<InequalityReport> {
    check_ladder(ladder)?;
    if !(r2 > 0.0 && r2 < r3 && r0 > 0.0) {
        return Err(Error::domain("need 0 < r2 < r3 and r0 > 0"));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut cases = 0;
    for &d in ladder {
        for n in 1..=nmax {
            let nf = n as f64;
            let lxi = alpha * d.ln() + nf * (r3 / r0).ln();
            let l1p = softplus(2.0 * lxi);
            let a = 2.0 * nf * r3.ln() - l1p - (-2.0 * alpha * d.ln() + 2.0 * nf * r0.ln());
            let b = 2.0 * lxi + 2.0 * nf * r2.ln() - l1p - (2.0 * (1.0 - alpha) * d.ln() + 2.0 * nf * r0.ln());
            first = first.max(a);
            second = second.max(b);
            cases += 1;
        }
    }
    Ok(InequalityReport {
        first: first.exp(),
        second: second.exp(),
        cases,
    })
}

/// Degree of maximal shell energy per ladder point, and its growth rate in
/// `ln(1/δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowScaling {
    pub deltas: Vec<f64>,
    pub n_star: Vec<usize>,
    pub slope: f64,
    /// `1 / (2 ln(r3/r*))` with `r* = √(r2 r3)`: the window sits where
    /// `δ^{1/2} (r3/r*)^n = 1`, whatever the source radius inside `B_{r3}`.
    pub predicted_slope: Option<f64>,
}

pub fn resonant_window_scaling(sweep: &SweepResult) -> Result<WindowScaling> {
    let rows: Vec<_> = sweep.successful().filter(|r| !r.shell_by_degree.is_empty()).collect();
    if rows.len() < 3 {
        return Err(Error::Indeterminate("need at least 3 ladder points".into()));
    }
    let n_star: Vec<usize> = rows
        .iter()
        .map(|r| {
            r.shell_by_degree
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i + 1)
                .unwrap_or(0)
        })
        .collect();
    let x: Vec<f64> = rows.iter().map(|r| (1.0 / r.delta).ln()).collect();
    let y: Vec<f64> = n_star.iter().map(|n| *n as f64).collect();
    let predicted_slope = sweep
        .source_radius
        .filter(|rs| *rs < sweep.r3)
        .map(|_| 1.0 / (sweep.r3 / sweep.r2).ln());
    Ok(WindowScaling {
        deltas: rows.iter().map(|r| r.delta).collect(),
        n_star,
        slope: lsq_slope(&x, &y).0,
        predicted_slope,
    })
}

/// Growth of single-mode solutions as `δ → 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `(n, pol, exponent)` with `‖(E, H)‖ ~ δ^{−exponent}`.
    pub exponents: Vec<(usize, Polarization, f64)>,
    pub worst: f64,
}

/// For unit single-mode surface currents at `rs`, fit the exponent of the
/// solution norm over `region` in `1/δ`.
pub fn mode_stability(
    medium: &LayeredMedium,
    degrees: &[usize],
    rs: f64,
    ladder: &[f64],
    region: Annulus,
    opts: &SolveOptions,
) -> Result<StabilityReport> {
    check_ladder(ladder)?;
    let mut exponents = Vec::new();
    for &n in degrees {
        for pol in Polarization::BOTH {
            let src = SphericalSource::SurfaceCurrent(SurfaceCurrent {
                radius: rs,
                flavor: CurrentFlavor::Electric,
                coefficients: vec![(ModeIndex::new(n, 0, pol), Complex64::new(1.0, 0.0))],
            });
            let mut x = Vec::new();
            let mut y = Vec::new();
            for &d in ladder {
                let mc = solve_mode(medium, n, pol, std::slice::from_ref(&src), d, opts)?;
                x.push((1.0 / d).ln());
                y.push(0.5 * mc.norm_sq(region)?.ln());
            }
            exponents.push((n, pol, lsq_slope(&x, &y).0));
        }
    }
    let worst = exponents.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport { exponents, worst })
}
