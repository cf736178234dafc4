//! Sources expressed as per-mode jumps of the tangential traces.
//!
//! On a sphere `|x| = r_s` an electric surface current `K` and a magnetic
//! surface current `M` impose
//!
//! ```text
//! x̂ × [H] = K,        x̂ × [E] = M,
//! ```
//!
//! which in the per-mode state variables used by the solver read
//!
//! ```text
//! TE (u, w) = (r e_V, r h_U):  [u] = -r M_U,  [w] =  r K_V
//! TM (p, q) = (r e_U, r h_V):  [p] =  r M_V,  [q] = -r K_U
//! ```
//!
//! Radial components of a volume current add `[p] = L σ/(iωε)` (electric)
//! or `[w] = -L σ/(iωμ)` (magnetic), with `L = √(n(n+1))`.

use super::{ModeIndex, Polarization};
use crate::special::AngularTable;
use crate::{CVec3, Complex64, Error, Result, Vec3};
use serde::{Deserialize, Serialize};

/// Electric currents enter Ampère's law, magnetic currents Faraday's law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurrentFlavor {
    Electric,
    Magnetic,
}

/// Tangential surface current on a sphere, given by its mode coefficients.
///
/// For the electric flavor, TE coefficients multiply `V_n^m` and TM
/// coefficients multiply `U_n^m`; for the magnetic flavor the roles of `U`
/// and `V` are exchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCurrent {
    pub radius: f64,
    pub flavor: CurrentFlavor,
    pub coefficients: Vec<(ModeIndex, Complex64)>,
}

/// Point current `moment · δ(x - position)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDipole {
    pub position: Vec3,
    pub moment: CVec3,
    pub flavor: CurrentFlavor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SphericalSource {
    SurfaceCurrent(SurfaceCurrent),
    PointDipole(PointDipole),
}

impl PointDipole {
    /// Electric dipole on the positive z-axis.
    pub fn on_axis(r: f64, moment: CVec3) -> Self {
        PointDipole {
            position: [0.0, 0.0, r],
            moment,
            flavor: CurrentFlavor::Electric,
        }
    }

    pub fn radius(&self) -> f64 {
        let p = self.position;
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }
}

impl SphericalSource {
    pub fn radius(&self) -> f64 {
        match self {
            SphericalSource::SurfaceCurrent(s) => s.radius,
            SphericalSource::PointDipole(d) => d.radius(),
        }
    }

    /// Largest degree carried by the source, `None` for infinitely many.
    pub fn max_degree(&self) -> Option<usize> {
        match self {
            SphericalSource::SurfaceCurrent(s) => Some(s.coefficients.iter().map(|(m, _)| m.n).max().unwrap_or(0)),
            SphericalSource::PointDipole(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SphericalSource::SurfaceCurrent(s) => s.coefficients.iter().all(|(_, c)| c.norm() == 0.0),
            SphericalSource::PointDipole(d) => d.moment.iter().all(|c| c.norm() == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("source radius {r}")));
        }
        if let SphericalSource::SurfaceCurrent(s) = self {
            for (m, c) in &s.coefficients {
                if m.n == 0 || m.m.unsigned_abs() as usize > m.n || !c.is_finite() {
                    return Err(Error::domain(format!("invalid mode coefficient {m:?} = {c}")));
                }
            }
        }
        Ok(())
    }

    /// Per-order jumps of the state `(u, w)` or `(p, q)` across the source
    /// sphere, for every mode order `m` with nonzero data.
    ///
    /// `eps`, `mu` are the coefficients at the source radius; `table` must be
    /// tabulated at the dipole direction up to at least degree `n` when the
    /// source is a dipole.
    pub fn jumps(
        &self,
        n: usize,
        pol: Polarization,
        omega: f64,
        eps: Complex64,
        mu: Complex64,
        table: Option<&AngularTable>,
    ) -> Result<Vec<(i64, [Complex64; 2])>> {
        let zero = Complex64::new(0.0, 0.0);
        let nf = n as f64;
        let l = (nf * (nf + 1.0)).sqrt();
        match self {
            SphericalSource::SurfaceCurrent(s) => {
                let r = s.radius;
                let mut out = Vec::new();
                for (idx, c) in &s.coefficients {
                    if idx.n != n || idx.pol != pol {
                        continue;
                    }
                    let jump = match (s.flavor, pol) {
                        (CurrentFlavor::Electric, Polarization::TE) => [zero, r * c],
                        (CurrentFlavor::Electric, Polarization::TM) => [zero, -r * c],
                        (CurrentFlavor::Magnetic, Polarization::TE) => [-r * c, zero],
                        (CurrentFlavor::Magnetic, Polarization::TM) => [r * c, zero],
                    };
                    match out.iter_mut().find(|(m, _)| *m == idx.m) {
                        Some((_, j)) => {
                            let j: &mut [Complex64; 2] = j;
                            j[0] += jump[0];
                            j[1] += jump[1];
                        }
                        None => out.push((idx.m, jump)),
                    }
                }
                out.sort_by_key(|(m, _)| *m);
                Ok(out)
            }
            SphericalSource::PointDipole(d) => {
                let table = table.ok_or_else(|| Error::domain("dipole jumps need an angular table"))?;
                let r = d.radius();
                let x = table.direction();
                let j = d.moment;
                let radial = j[0] * x[0] + j[1] * x[1] + j[2] * x[2];
                let i = Complex64::i();
                let mut out = Vec::new();
                for m in -(n as i64)..=(n as i64) {
                    let s = table.sample(n, m)?;
                    let dot = |v: &CVec3| j[0] * v[0].conj() + j[1] * v[1].conj() + j[2] * v[2].conj();
                    let (ku, kv) = (dot(&s.u) / (r * r), dot(&s.v) / (r * r));
                    let sigma = radial * s.y.conj() / (r * r);
                    let jump = match (d.flavor, pol) {
                        (CurrentFlavor::Electric, Polarization::TE) => [zero, r * kv],
                        (CurrentFlavor::Electric, Polarization::TM) => [l * sigma / (i * omega * eps), -r * ku],
                        (CurrentFlavor::Magnetic, Polarization::TE) => [-r * ku, -l * sigma / (i * omega * mu)],
                        (CurrentFlavor::Magnetic, Polarization::TM) => [r * kv, zero],
                    };
                    if jump[0].norm() > 0.0 || jump[1].norm() > 0.0 {
                        out.push((m, jump));
                    }
                }
                Ok(out)
            }
        }
    }
}
