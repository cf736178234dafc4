//! Kelvin inversions, dilations and their compositions.

use crate::{Error, Result, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// A radial reflection-type map of `ℝ³ ∖ {0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ReflectionMap {
    Identity,
    /// `x ↦ s² x / |x|²`.
    Kelvin(f64),
    /// `x ↦ ρ x`.
    Dilation(f64),
    /// Maps applied left to right: `Composition([a, b])` is `b ∘ a`.
    Composition(Vec<ReflectionMap>),
}

pub(crate) fn norm(x: Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn scale(x: Vec3, c: f64) -> Vec3 {
    [x[0] * c, x[1] * c, x[2] * c]
}

impl ReflectionMap {
    /// `then ∘ self`.
    pub fn then(&self, then: &ReflectionMap) -> ReflectionMap {
        ReflectionMap::Composition(vec![self.clone(), then.clone()])
    }

    fn check(&self) -> Result<()> {
        match self {
            ReflectionMap::Kelvin(s) if !(*s > 0.0 && s.is_finite()) => {
                Err(Error::domain(format!("Kelvin radius {s}")))
            }
            ReflectionMap::Dilation(r) if !(*r > 0.0 && r.is_finite()) => {
                Err(Error::domain(format!("dilation factor {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Sign of `det ∇T`.
    pub fn orientation(&self) -> i32 {
        match self {
            ReflectionMap::Identity | ReflectionMap::Dilation(_) => 1,
            ReflectionMap::Kelvin(_) => -1,
            ReflectionMap::Composition(v) => v.iter().map(|m| m.orientation()).product(),
        }
    }

    pub fn apply(&self, x: Vec3) -> Result<Vec3> {
        self.check()?;
        match self {
            ReflectionMap::Identity => Ok(x),
            ReflectionMap::Kelvin(s) => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                if r2 == 0.0 {
                    return Err(Error::domain("Kelvin inversion at the origin"));
                }
                Ok(scale(x, s * s / r2))
            }
            ReflectionMap::Dilation(rho) => Ok(scale(x, *rho)),
            ReflectionMap::Composition(v) => v.iter().try_fold(x, |y, m| m.apply(y)),
        }
    }

    pub fn inverse(&self) -> ReflectionMap {
        match self {
            ReflectionMap::Identity => ReflectionMap::Identity,
            ReflectionMap::Kelvin(s) => ReflectionMap::Kelvin(*s),
            ReflectionMap::Dilation(r) => ReflectionMap::Dilation(1.0 / r),
            ReflectionMap::Composition(v) => {
                ReflectionMap::Composition(v.iter().rev().map(|m| m.inverse()).collect())
            }
        }
    }

    /// `∇T(x)`.
    pub fn jacobian(&self, x: Vec3) -> Result<Matrix3<f64>> {
        self.check()?;
        match self {
            ReflectionMap::Identity => Ok(Matrix3::identity()),
            ReflectionMap::Kelvin(s) => {
                let r = norm(x);
                if r == 0.0 {
                    return Err(Error::domain("Kelvin Jacobian at the origin"));
                }
                let u = nalgebra::Vector3::new(x[0] / r, x[1] / r, x[2] / r);
                Ok((Matrix3::identity() - 2.0 * u * u.transpose()) * (s * s / (r * r)))
            }
            ReflectionMap::Dilation(rho) => Ok(Matrix3::identity() * *rho),
            ReflectionMap::Composition(v) => {
                let mut y = x;
                let mut j = Matrix3::identity();
                for m in v {
                    j = m.jacobian(y)? * j;
                    y = m.apply(y)?;
                }
                Ok(j)
            }
        }
    }

    /// Image radius `|T(x)|` as a function of `|x|`.
    pub fn radial_image(&self, r: f64) -> Result<f64> {
        Ok(norm(self.apply([0.0, 0.0, r])?))
    }
}
