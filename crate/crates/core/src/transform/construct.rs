//! Verification and construction of (doubly) complementary radial media.

use super::maps::{norm, ReflectionMap};
use super::tensor::{
    push_forward_point_current, push_forward_surface_current, push_forward_tensor, ConformalRadialTensor, Side,
    TensorField,
};
use crate::media::{close, with_loss, LayeredMedium, RadialLayer};
use crate::solver::{PointDipole, SphericalSource, SurfaceCurrent};
use crate::{Complex64, Error, Result, Vec3};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Coefficients of a medium restricted to the annulus `r_in < |x| < r_out`.
#[derive(Clone, Copy)]
pub struct MediumRegion<'a> {
    pub eps: &'a dyn TensorField,
    pub mu: &'a dyn TensorField,
    pub r_in: f64,
    pub r_out: f64,
}

impl MediumRegion<'_> {
    fn contains(&self, r: f64) -> bool {
        r > self.r_in && r < self.r_out
    }

    fn contains_closed(&self, r: f64) -> bool {
        self.contains(r) || close(r, self.r_in) || close(r, self.r_out)
    }

    /// Side pointing into the region for a radius on its boundary.
    fn inward(&self, r: f64) -> Side {
        if close(r, self.r_out) {
            Side::Inner
        } else {
            Side::Outer
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max ‖T_*ε - ε'‖_F` over the tensor samples.
    pub eps_residual: f64,
    pub mu_residual: f64,
    /// `max |F(x) - x|` over boundary samples.
    pub boundary_residual: f64,
    pub tensor_samples: usize,
    pub boundary_samples: usize,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.eps_residual.max(self.mu_residual).max(self.boundary_residual)
    }
}

fn frob(m: &Matrix3<Complex64>) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Check `F_*ε_shell = ε_outer`, `F_*μ_shell = μ_outer` on the outer
/// region, and `F(x) = x` on its inner boundary.
///
/// Samples strictly inside the outer region are tensor samples; samples on
/// its inner sphere are boundary samples; everything else is skipped.
pub fn verify_complementary(
    shell: MediumRegion<'_>,
    outer: MediumRegion<'_>,
    f: &ReflectionMap,
    samples: &[Vec3],
) -> Result<ResidualReport> {
    let mut rep = ResidualReport::default();
    if samples.is_empty() {
        rep.warnings.push("empty sample set".into());
        return Ok(rep);
    }
    let finv = f.inverse();
    for &y in samples {
        let r = norm(y);
        if close(r, outer.r_in) {
            let fx = f.apply(y)?;
            let d = norm([fx[0] - y[0], fx[1] - y[1], fx[2] - y[2]]);
            rep.boundary_residual = rep.boundary_residual.max(d);
            rep.boundary_samples += 1;
            continue;
        }
        if !outer.contains(r) {
            rep.skipped += 1;
            continue;
        }
        let x = finv.apply(y)?;
        if !shell.contains_closed(norm(x)) {
            rep.skipped += 1;
            continue;
        }
        let side = outer.inward(r);
        for (a, b, slot) in [
            (shell.eps, outer.eps, &mut rep.eps_residual),
            (shell.mu, outer.mu, &mut rep.mu_residual),
        ] {
            let pushed = push_forward_tensor(f, a, y, side)?;
            let d = frob(&(pushed - b.tensor(y, side)?));
            *slot = slot.max(d);
        }
        rep.tensor_samples += 1;
    }
    Ok(rep)
}

/// Check `(G∘F)_*ε⁺ = ε⁺` and the same for `μ⁺` on `region`.
///
/// Samples on the region's boundary evaluate the piecewise coefficients from
/// the side facing into the region.
pub fn verify_dcm(
    f: &ReflectionMap,
    g: &ReflectionMap,
    eps_plus: &dyn TensorField,
    mu_plus: &dyn TensorField,
    region_in: f64,
    region_out: f64,
    samples: &[Vec3],
) -> Result<ResidualReport> {
    let mut rep = ResidualReport::default();
    if samples.is_empty() {
        rep.warnings.push("empty sample set".into());
        return Ok(rep);
    }
    let region = MediumRegion {
        eps: eps_plus,
        mu: mu_plus,
        r_in: region_in,
        r_out: region_out,
    };
    let gf = f.then(g);
    for &y in samples {
        let r = norm(y);
        if !region.contains_closed(r) {
            rep.skipped += 1;
            continue;
        }
        let side = region.inward(r);
        for (a, slot) in [(eps_plus, &mut rep.eps_residual), (mu_plus, &mut rep.mu_residual)] {
            let pushed = push_forward_tensor(&gf, a, y, side)?;
            let d = frob(&(pushed - a.tensor(y, side)?));
            *slot = slot.max(d);
        }
        rep.tensor_samples += 1;
    }
    Ok(rep)
}

/// Parameters of the radial doubly complementary construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcmParams {
    pub r2: f64,
    pub r3: f64,
    pub lambda: f64,
    pub omega: f64,
    /// Outer radius of the source-bearing ball, at least `r3`.
    pub r0: f64,
    /// Coefficient filling the innermost ball `O`.
    pub core_background: f64,
}

impl DcmParams {
    pub fn new(r2: f64, r3: f64, lambda: f64, omega: f64) -> Self {
        DcmParams {
            r2,
            r3,
            lambda,
            omega,
            r0: r3,
            core_background: 1.0,
        }
    }
}

/// Radii of the construction, innermost first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    /// Radius of the innermost ball `O`.
    pub r_core: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcmConstruction {
    pub params: DcmParams,
    /// The medium with the negative shell on `r1 < |x| < r2`.
    pub medium: LayeredMedium,
    /// `Kelvin(r2)`.
    pub f: ReflectionMap,
    /// `Kelvin(r3)`.
    pub g: ReflectionMap,
    /// `(r3/r2)²`.
    pub rho: f64,
    /// `(G_*F_*ε⁺, G_*F_*μ⁺)` in `B_{r3}`, `ε⁺` outside; same layer radii as
    /// `medium`, no loss anywhere.
    pub effective: LayeredMedium,
    pub regions: RegionTable,
}

/// Build the radial doubly complementary medium for `F = Kelvin(r2)`,
/// `G = Kelvin(r3)`.
pub fn build_dc_medium(r2: f64, r3: f64, lambda: f64, omega: f64) -> Result<DcmConstruction> {
    build_dc_medium_with(DcmParams::new(r2, r3, lambda, omega))
}

pub fn build_dc_medium_with(p: DcmParams) -> Result<DcmConstruction> {
    let DcmParams {
        r2,
        r3,
        lambda,
        omega,
        r0,
        core_background,
    } = p;
    if !(r2 > 0.0 && r2 < r3 && r3.is_finite()) {
        return Err(Error::domain(format!("need 0 < r2 < r3, got r2 = {r2}, r3 = {r3}")));
    }
    if !(lambda > 0.0 && omega > 0.0 && core_background > 0.0) {
        return Err(Error::domain("lambda, omega and the core background must be positive"));
    }
    if !(r0 >= r3) {
        return Err(Error::domain("R0 must be at least r3"));
    }
    let f = ReflectionMap::Kelvin(r2);
    let g = ReflectionMap::Kelvin(r3);
    let rho = (r3 / r2).powi(2);
    let r1 = r2 * r2 / r3;
    let r_core = r2.powi(3) / (r3 * r3);

    let band = ConformalRadialTensor::constant(lambda);
    // the shell is the pull-back of the λ band through F
    let shell = band.push_forward(&f)?;
    // the core annulus is the pull-back of the λ band through G∘F
    let core = band.push_forward(&f.then(&g).inverse())?;
    let bg = ConformalRadialTensor::constant(core_background);
    let vac = ConformalRadialTensor::constant(1.0);

    let layer = |a, b, t: ConformalRadialTensor, lossy| RadialLayer::new(a, b, t, t, lossy);
    let medium = LayeredMedium::new(
        vec![
            layer(0.0, r_core, bg, false),
            layer(r_core, r1, core, false),
            layer(r1, r2, shell, true),
            layer(r2, r3, band, false),
            layer(r3, f64::INFINITY, vac, false),
        ],
        r1,
        r2,
        r3,
        r0,
        omega,
        lambda,
    )?;

    let inner_eff = bg.push_forward(&f.then(&g))?;
    let effective = LayeredMedium::new(
        vec![
            layer(0.0, r_core, inner_eff, false),
            layer(r_core, r1, inner_eff, false),
            layer(r1, r2, inner_eff, false),
            layer(r2, r3, band, false),
            layer(r3, f64::INFINITY, vac, false),
        ],
        r1,
        r2,
        r3,
        r0,
        omega,
        lambda,
    )?;

    Ok(DcmConstruction {
        params: p,
        medium,
        f,
        g,
        rho,
        effective,
        regions: RegionTable {
            r_core,
            r1,
            r2,
            r3,
            r0,
        },
    })
}

/// Sources of the effective problem,
/// `1_{ℝ³∖Ω₂} J − 1_{Ω₃∖Ω₂} F_*J + 1_{Ω₃} (G∘F)_*J` with `Ω_i = B_{r_i}`.
pub fn build_tilde_source(
    j: &SphericalSource,
    f: &ReflectionMap,
    g: &ReflectionMap,
    r2: f64,
    r3: f64,
) -> Result<Vec<SphericalSource>> {
    j.validate()?;
    if j.is_zero() {
        return Ok(Vec::new());
    }
    let r1 = r2 * r2 / r3;
    let rs = j.radius();
    for b in [r1, r2, r3] {
        if close(rs, b) {
            return Err(Error::domain(format!("source radius {rs} lies on the interface {b}")));
        }
    }
    let gf = f.then(g);
    let mut out = Vec::new();
    if rs > r2 {
        out.push(j.clone());
    }
    let (rf, _) = push_forward_surface_current(f, rs)?;
    if rf > r2 && rf < r3 {
        out.push(push_source(j, f, -1.0)?);
    }
    let (rgf, _) = push_forward_surface_current(&gf, rs)?;
    if rgf < r3 {
        out.push(push_source(j, &gf, 1.0)?);
    }
    Ok(out)
}

/// `count` points uniform in volume on `r_in < |x| < r_out`.
pub fn sample_annulus(count: usize, r_in: f64, r_out: f64, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a3, b3) = (r_in.powi(3), r_out.powi(3));
    (0..count)
        .map(|_| {
            let r = (a3 + rng.gen::<f64>() * (b3 - a3)).cbrt();
            let ct: f64 = rng.gen_range(-1.0..1.0);
            let st = (1.0 - ct * ct).sqrt();
            let ph = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * st * ph.cos(), r * st * ph.sin(), r * ct]
        })
        .collect()
}

/// Residuals of both identities of a construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionResiduals {
    /// `F_*` of the shell against the `λ` band.
    pub complementary: ResidualReport,
    /// `(G∘F)_*ε⁺ = ε⁺` on the band.
    pub dcm: ResidualReport,
}

impl DcmConstruction {
    /// Check both identities on `count` random points of `r2 < |x| < r3`.
    pub fn residuals(&self, count: usize, seed: u64) -> Result<ConstructionResiduals> {
        let plain = with_loss(&self.medium, 0.0)?;
        let (eps, mu) = (plain.eps(), plain.mu());
        let RegionTable { r1, r2, r3, .. } = self.regions;
        let samples = sample_annulus(count, r2, r3, seed);
        let shell = MediumRegion {
            eps: &eps,
            mu: &mu,
            r_in: r1,
            r_out: r2,
        };
        let outer = MediumRegion { r_in: r2, r_out: r3, ..shell };
        Ok(ConstructionResiduals {
            complementary: verify_complementary(shell, outer, &self.f, &samples)?,
            dcm: verify_dcm(&self.f, &self.g, &eps, &mu, r2, r3, &samples)?,
        })
    }
}

fn push_source(j: &SphericalSource, map: &ReflectionMap, sign: f64) -> Result<SphericalSource> {
    Ok(match j {
        SphericalSource::SurfaceCurrent(s) => {
            let (r, fac) = push_forward_surface_current(map, s.radius)?;
            SphericalSource::SurfaceCurrent(SurfaceCurrent {
                radius: r,
                flavor: s.flavor,
                coefficients: s.coefficients.iter().map(|(m, c)| (*m, c * fac * sign)).collect(),
            })
        }
        SphericalSource::PointDipole(d) => {
            let (x, m) = push_forward_point_current(map, d.position, d.moment)?;
            SphericalSource::PointDipole(PointDipole {
                position: x,
                moment: [m[0] * sign, m[1] * sign, m[2] * sign],
                flavor: d.flavor,
            })
        }
    })
}
