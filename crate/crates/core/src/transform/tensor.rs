//! Push-forwards of isotropic radial tensors, fields and currents.

use super::maps::{norm, ReflectionMap};
use crate::{CVec3, Complex64, Error, Result, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// `A(x) = c (s/|x|)^p I` with `p ∈ {0, 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalRadialTensor {
    pub c: Complex64,
    pub s: f64,
    pub p: u8,
}

/// Which side of an interface a piecewise quantity is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Side {
    #[default]
    Inner,
    Outer,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Inner => Side::Outer,
            Side::Outer => Side::Inner,
        }
    }
}

/// A (possibly piecewise) tensor field.
pub trait TensorField {
    fn tensor(&self, x: Vec3, side: Side) -> Result<Matrix3<Complex64>>;
}

impl ConformalRadialTensor {
    pub fn constant(c: f64) -> Self {
        ConformalRadialTensor {
            c: Complex64::new(c, 0.0),
            s: 1.0,
            p: 0,
        }
    }

    pub fn conformal(c: f64, s: f64) -> Self {
        ConformalRadialTensor {
            c: Complex64::new(c, 0.0),
            s,
            p: 2,
        }
    }

    /// Scalar coefficient at radius `r`.
    pub fn at(&self, r: f64) -> Complex64 {
        match self.p {
            0 => self.c,
            _ => self.c * (self.s / r).powi(self.p as i32),
        }
    }

    /// Closed-form push-forward under a radial map.
    pub fn push_forward(&self, map: &ReflectionMap) -> Result<ConformalRadialTensor> {
        let c = self.c;
        Ok(match map {
            ReflectionMap::Identity => *self,
            ReflectionMap::Kelvin(t) => match self.p {
                0 => ConformalRadialTensor { c: -c, s: *t, p: 2 },
                2 => ConformalRadialTensor {
                    c: -c * (self.s / t).powi(2),
                    s: *t,
                    p: 0,
                },
                p => return Err(Error::domain(format!("unsupported power {p}"))),
            },
            ReflectionMap::Dilation(rho) => match self.p {
                0 => ConformalRadialTensor {
                    c: c / rho,
                    ..*self
                },
                2 => ConformalRadialTensor {
                    c: c * *rho,
                    ..*self
                },
                p => return Err(Error::domain(format!("unsupported power {p}"))),
            },
            ReflectionMap::Composition(v) => {
                let mut a = *self;
                for m in v {
                    a = a.push_forward(m)?;
                }
                a
            }
        })
    }
}

impl TensorField for ConformalRadialTensor {
    fn tensor(&self, x: Vec3, _side: Side) -> Result<Matrix3<Complex64>> {
        let r = norm(x);
        if self.p != 0 && r == 0.0 {
            return Err(Error::domain("conformal tensor at the origin"));
        }
        Ok(Matrix3::identity() * self.at(r))
    }
}

/// Adapter turning a closure into a [`TensorField`].
pub struct FnTensor<F>(pub F);

impl<F> TensorField for FnTensor<F>
where
    F: Fn(Vec3, Side) -> Result<Matrix3<Complex64>>,
{
    fn tensor(&self, x: Vec3, side: Side) -> Result<Matrix3<Complex64>> {
        (self.0)(x, side)
    }
}

fn complexify(m: &Matrix3<f64>) -> Matrix3<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// `T_*A(y) = ∇T A ∇Tᵀ / det ∇T` evaluated at `x = T⁻¹(y)`.
///
/// `side` refers to `y`; the side at the preimage follows the map's
/// orientation in the radial direction.
pub fn push_forward_tensor(
    map: &ReflectionMap,
    a: &dyn TensorField,
    y: Vec3,
    side: Side,
) -> Result<Matrix3<Complex64>> {
    let inv = map.inverse();
    let x = inv.apply(y)?;
    let j = map.jacobian(x)?;
    let det = j.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::domain("singular Jacobian"));
    }
    let side_x = if map.orientation() < 0 { side.flipped() } else { side };
    let jc = complexify(&j);
    Ok(jc * a.tensor(x, side_x)? * jc.transpose() / Complex64::new(det, 0.0))
}

fn mat_vec(m: &Matrix3<f64>, v: CVec3) -> CVec3 {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[(i, 0)] * v[0] + m[(i, 1)] * v[1] + m[(i, 2)] * v[2];
    }
    out
}

/// `T*E = ∇T^{-T} E`, returned together with the image point.
pub fn push_forward_field(map: &ReflectionMap, x: Vec3, e: CVec3) -> Result<(Vec3, CVec3)> {
    let j = map.jacobian(x)?;
    let inv_t = j
        .try_inverse()
        .ok_or_else(|| Error::domain("singular Jacobian"))?
        .transpose();
    Ok((map.apply(x)?, mat_vec(&inv_t, e)))
}

/// Transport of a current density, `∇T j / det ∇T`, with the image point.
///
/// This is the density that makes the transported fields satisfy the
/// transported Maxwell system. For a point current `j δ(x - x₀)` the image
/// is `sign(det ∇T) ∇T(x₀) j` at `T(x₀)`; see [`push_forward_point_current`].
pub fn push_forward_current(map: &ReflectionMap, x: Vec3, j: CVec3) -> Result<(Vec3, CVec3)> {
    let jac = map.jacobian(x)?;
    let det = jac.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::domain("singular Jacobian"));
    }
    let v = mat_vec(&jac, j);
    Ok((map.apply(x)?, [v[0] / det, v[1] / det, v[2] / det]))
}

/// Image of a point current `j δ(x - x₀)`.
pub fn push_forward_point_current(map: &ReflectionMap, x0: Vec3, j: CVec3) -> Result<(Vec3, CVec3)> {
    let jac = map.jacobian(x0)?;
    let s = map.orientation() as f64;
    let v = mat_vec(&jac, j);
    Ok((map.apply(x0)?, [v[0] * s, v[1] * s, v[2] * s]))
}

/// Image radius and amplitude factor of a tangential surface current
/// `K(x̂) δ(|x| - r)` under a radial map.
///
/// The angular profile is unchanged (radial maps fix directions), so the
/// factor applies to every mode coefficient alike.
pub fn push_forward_surface_current(map: &ReflectionMap, r: f64) -> Result<(f64, f64)> {
    match map {
        ReflectionMap::Identity => Ok((r, 1.0)),
        ReflectionMap::Kelvin(s) => {
            if r <= 0.0 {
                return Err(Error::domain("surface current at the origin"));
            }
            Ok((s * s / r, -(r / s).powi(2)))
        }
        ReflectionMap::Dilation(rho) => Ok((rho * r, 1.0 / rho)),
        ReflectionMap::Composition(v) => v.iter().try_fold((r, 1.0), |(r, f), m| {
            let (r2, f2) = push_forward_surface_current(m, r)?;
            Ok((r2, f * f2))
        }),
    }
}
