//! Layered radial media, loss, and the dissipated power.

use crate::solver::{norm_l2, FieldSolution};
use crate::transform::{ConformalRadialTensor, Side, TensorField};
use crate::{Complex64, Error, Result, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Relative tolerance used to decide that a radius lies on an interface.
pub const INTERFACE_RTOL: f64 = 1e-12;

/// One spherical layer `r_in < |x| < r_out` with isotropic coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialLayer {
    pub r_in: f64,
    /// `f64::INFINITY` for the outermost layer.
    pub r_out: f64,
    pub eps: ConformalRadialTensor,
    pub mu: ConformalRadialTensor,
    /// Receives the additive loss `iδ`.
    pub lossy: bool,
}

impl RadialLayer {
    pub fn new(r_in: f64, r_out: f64, eps: ConformalRadialTensor, mu: ConformalRadialTensor, lossy: bool) -> Self {
        RadialLayer {
            r_in,
            r_out,
            eps,
            mu,
            lossy,
        }
    }

    /// Permittivity and permeability at `r` with loss `δ` applied.
    pub fn coefficients(&self, r: f64, delta: f64) -> (Complex64, Complex64) {
        let loss = if self.lossy { Complex64::new(0.0, delta) } else { Complex64::new(0.0, 0.0) };
        (self.eps.at(r) + loss, self.mu.at(r) + loss)
    }
}

/// Spherical annulus `r_in < |x| < r_out`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_in: f64,
    pub r_out: f64,
}

impl Annulus {
    pub fn new(r_in: f64, r_out: f64) -> Self {
        Annulus { r_in, r_out }
    }

    pub fn ball(r: f64) -> Self {
        Annulus { r_in: 0.0, r_out: r }
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r_in && r < self.r_out
    }
}

/// A radially layered medium together with the reference radii of the
/// doubly complementary construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredMedium {
    pub layers: Vec<RadialLayer>,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r0: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl LayeredMedium {
    /// Validates that the layers partition `(0, ∞)`, that
    /// `r1 < r2 < r3 ≤ r0`, and that `r1, r2, r3` are layer boundaries.
    #[allow(clippy::too_many_arguments)]
    pub fn new(layers: Vec<RadialLayer>, r1: f64, r2: f64, r3: f64, r0: f64, omega: f64, lambda: f64) -> Result<Self> {
        let m = LayeredMedium {
            layers,
            r1,
            r2,
            r3,
            r0,
            omega,
            lambda,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.layers;
        if l.is_empty() {
            return Err(Error::domain("medium without layers"));
        }
        if l[0].r_in != 0.0 || l[l.len() - 1].r_out != f64::INFINITY {
            return Err(Error::domain("layers must start at 0 and extend to infinity"));
        }
        for w in l.windows(2) {
            if w[0].r_out != w[1].r_in {
                return Err(Error::domain("layers must be contiguous"));
            }
        }
        if l.iter().any(|x| !(x.r_out > x.r_in)) {
            return Err(Error::domain("empty layer"));
        }
        if !(self.r1 < self.r2 && self.r2 < self.r3 && self.r3 <= self.r0) {
            return Err(Error::domain("radii must satisfy r1 < r2 < r3 <= R0"));
        }
        if !(self.omega > 0.0) {
            return Err(Error::domain("omega must be positive"));
        }
        for r in [self.r1, self.r2, self.r3] {
            if !self.interfaces().iter().any(|b| close(*b, r)) {
                return Err(Error::domain(format!("radius {r} is not a layer boundary")));
            }
        }
        Ok(())
    }

    /// Interior interface radii in increasing order.
    pub fn interfaces(&self) -> Vec<f64> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.r_out).collect()
    }

    /// Index of the layer containing `r`; on an interface `side` decides.
    pub fn layer_index(&self, r: f64, side: Side) -> usize {
        for (i, l) in self.layers.iter().enumerate() {
            if close(r, l.r_out) {
                return match side {
                    Side::Inner => i,
                    Side::Outer => (i + 1).min(self.layers.len() - 1),
                };
            }
            if r < l.r_out {
                return i;
            }
        }
        self.layers.len() - 1
    }

    pub fn layer_at(&self, r: f64, side: Side) -> &RadialLayer {
        &self.layers[self.layer_index(r, side)]
    }

    /// True when `r` coincides with an interface.
    pub fn on_interface(&self, r: f64) -> bool {
        self.interfaces().iter().any(|b| close(*b, r))
    }

    /// Index of the loss-carrying layer, if any.
    pub fn lossy_layer(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.lossy)
    }

    /// Copy with every layer replaced by vacuum (and no loss).
    pub fn vacuum_like(&self) -> LayeredMedium {
        let mut m = self.clone();
        for l in &mut m.layers {
            l.eps = ConformalRadialTensor::constant(1.0);
            l.mu = ConformalRadialTensor::constant(1.0);
        }
        m
    }

    /// Checks the sign structure expected of a doubly complementary medium:
    /// positive real parts off the lossy layer, negative on it.
    pub fn check_signs(&self) -> Result<()> {
        for l in &self.layers {
            let mid = if l.r_out.is_finite() { 0.5 * (l.r_in + l.r_out) } else { l.r_in + 1.0 };
            let (e, m) = (l.eps.at(mid), l.mu.at(mid));
            let ok = if l.lossy { e.re < 0.0 && m.re < 0.0 } else { e.re > 0.0 && m.re > 0.0 };
            if !ok {
                return Err(Error::domain(format!("sign structure violated on ({}, {})", l.r_in, l.r_out)));
            }
        }
        Ok(())
    }
}

pub(crate) fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= INTERFACE_RTOL * a.abs().max(b.abs()).max(1e-300)
}

/// Pointwise sampler of `(ε_δ, μ_δ)`.
#[derive(Clone, Copy, Debug)]
pub struct LossyMedium<'a> {
    pub medium: &'a LayeredMedium,
    pub delta: f64,
}

/// Attach the loss `δ ≥ 0` to the lossy layer of `medium`.
pub fn with_loss(medium: &LayeredMedium, delta: f64) -> Result<LossyMedium<'_>> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("loss must be nonnegative, got {delta}")));
    }
    Ok(LossyMedium { medium, delta })
}

fn radius(x: Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

impl LossyMedium<'_> {
    /// Scalar `(ε_δ, μ_δ)` at radius `r`.
    pub fn at(&self, r: f64, side: Side) -> (Complex64, Complex64) {
        self.medium.layer_at(r, side).coefficients(r, self.delta)
    }

    pub fn eps(&self) -> impl TensorField + '_ {
        Component { m: self, mu: false }
    }

    pub fn mu(&self) -> impl TensorField + '_ {
        Component { m: self, mu: true }
    }
}

struct Component<'a, 'b> {
    m: &'b LossyMedium<'a>,
    mu: bool,
}

impl TensorField for Component<'_, '_> {
    fn tensor(&self, x: Vec3, side: Side) -> Result<Matrix3<Complex64>> {
        let (e, m) = self.m.at(radius(x), side);
        Ok(Matrix3::identity() * if self.mu { m } else { e })
    }
}

/// Dissipated power `δ ∫_region |(E, H)|²`.
pub fn power(fields: &FieldSolution, delta: f64, region: Annulus) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(delta * norm_l2(fields, region)?.powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shell_medium() -> LayeredMedium {
        let one = ConformalRadialTensor::constant(1.0);
        let sh = ConformalRadialTensor::conformal(-1.0, 1.0);
        LayeredMedium::new(
            vec![
                RadialLayer::new(0.0, 0.5, one, one, false),
                RadialLayer::new(0.5, 1.0, sh, sh, true),
                RadialLayer::new(1.0, 2.0, one, one, false),
                RadialLayer::new(2.0, f64::INFINITY, one, one, false),
            ],
            0.5,
            1.0,
            2.0,
            2.0,
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn loss_is_added_on_the_shell_only() {
        let m = shell_medium();
        let l = with_loss(&m, 1e-3).unwrap();
        let (e, _) = l.at(0.8, Side::Inner);
        assert!((e - Complex64::new(-1.5625, 1e-3)).norm() < 1e-15);
        let (e, mu) = l.at(1.5, Side::Inner);
        assert_eq!((e, mu), (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)));
        assert!(with_loss(&m, -1.0).is_err());
        let l0 = with_loss(&m, 0.0).unwrap();
        assert_eq!(l0.at(0.8, Side::Inner).0, Complex64::new(-1.5625, 0.0));
    }

    #[test]
    fn interface_side_selection() {
        let m = shell_medium();
        assert_eq!(m.layer_index(1.0, Side::Inner), 1);
        assert_eq!(m.layer_index(1.0, Side::Outer), 2);
        assert_eq!(m.layer_index(0.7, Side::Outer), 1);
        assert_eq!(m.layer_index(10.0, Side::Inner), 3);
    }
}
