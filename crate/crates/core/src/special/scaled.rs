//! Complex numbers with a detached exponent, `m · e^s`.

use num_complex::Complex64;
use std::ops::{Div, Mul};

/// A complex value stored as `mantissa · exp(log_scale)`.
///
/// Zero is represented with a zero mantissa; its scale is irrelevant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: Complex64::new(0.0, 0.0),
        log_scale: 0.0,
    };

    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        Scaled {
            mantissa,
            log_scale,
        }
        .normalized()
    }

    pub fn from_complex(z: Complex64) -> Self {
        Scaled::new(z, 0.0)
    }

    /// Rescale so that the mantissa has modulus in `[1, e)` (or is zero).
    pub fn normalized(self) -> Self {
        let a = self.mantissa.norm();
        if a == 0.0 || !a.is_finite() {
            return self;
        }
        let l = a.ln().floor();
        Scaled {
            mantissa: self.mantissa * (-l).exp(),
            log_scale: self.log_scale + l,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == Complex64::new(0.0, 0.0)
    }

    /// Natural logarithm of the modulus; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// Plain complex value; may overflow to infinity or underflow to zero.
    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return self.mantissa;
        }
        self.mantissa * self.log_scale.exp()
    }

    /// Value multiplied by `exp(-shift)`, evaluated without intermediate
    /// overflow.
    pub fn value_shifted(&self, shift: f64) -> Complex64 {
        if self.is_zero() {
            return self.mantissa;
        }
        self.mantissa * (self.log_scale - shift).exp()
    }

    pub fn scale_real(self, c: f64) -> Self {
        Scaled::new(self.mantissa * c, self.log_scale)
    }

    /// Sum of two scaled values.
    pub fn add(self, other: Scaled) -> Scaled {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let s = self.log_scale.max(other.log_scale);
        Scaled::new(self.value_shifted(s) + other.value_shifted(s), s)
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Scaled) -> Scaled {
        Scaled::new(self.mantissa * rhs.mantissa, self.log_scale + rhs.log_scale)
    }
}

impl Mul<Complex64> for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Complex64) -> Scaled {
        Scaled::new(self.mantissa * rhs, self.log_scale)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        Scaled::new(self.mantissa / rhs.mantissa, self.log_scale - rhs.log_scale)
    }
}

/// `sin z`, `cos z` and `exp(iz)` sharing the scale `exp(|Im z|)`.
///
/// Returns `(sin z · e^{-|Im z|}, cos z · e^{-|Im z|}, |Im z|)`.
pub(crate) fn sin_cos_scaled(z: Complex64) -> (Complex64, Complex64, f64) {
    let a = z.re;
    let b = z.im;
    let t = b.abs();
    // e^{iz} = e^{-b} e^{ia}, e^{-iz} = e^{b} e^{-ia}
    let ep = Complex64::from_polar((-b - t).exp(), a);
    let em = Complex64::from_polar((b - t).exp(), -a);
    let i = Complex64::i();
    ((ep - em) / (2.0 * i), (ep + em) / 2.0, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_products() {
        let a = Scaled::from_complex(Complex64::new(3.0, -4.0));
        assert!((a.value() - Complex64::new(3.0, -4.0)).norm() < 1e-15);
        let big = Scaled::new(Complex64::new(1.0, 0.0), 1000.0);
        let q = (big * a) / big;
        assert!((q.value() - a.value()).norm() < 1e-12);
        assert!((big.ln_abs() - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn trig_scaled_matches_direct() {
        for z in [Complex64::new(0.3, 0.0), Complex64::new(2.0, 1.5), Complex64::new(-1.0, -3.0)] {
            let (s, c, l) = sin_cos_scaled(z);
            assert!((s * l.exp() - z.sin()).norm() < 1e-13 * z.sin().norm().max(1.0));
            assert!((c * l.exp() - z.cos()).norm() < 1e-13 * z.cos().norm().max(1.0));
        }
    }
}
