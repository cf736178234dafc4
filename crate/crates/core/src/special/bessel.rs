//! Normalized spherical Bessel functions.
//!
//! With `j_n`, `y_n` the classical spherical Bessel functions,
//!
//! ```text
//! ĵ_n(z) = (2n+1)!! j_n(z),      ŷ_n(z) = -y_n(z) / (2n-1)!!,
//! ```
//!
//! so that `ĵ_n(z) ~ z^n` and `ŷ_n(z) ~ z^{-n-1}` as `z → 0`. The outgoing
//! combination `ĥ_n = ŷ_n + i ĵ_n / ((2n+1)!! (2n-1)!!)` is proportional to
//! `h_n^{(1)}`.
//!
//! The "Riccati derivative" of `f` is `(z f(z))'`.
//!
//! All values carry a detached exponent so that orders up to several hundred
//! never overflow.

use super::scaled::{sin_cos_scaled, Scaled};
use crate::{Error, Result};
use num_complex::Complex64;

/// Which normalized radial function to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RadialKind {
    /// `ĵ_n`, regular at the origin.
    Regular,
    /// `ŷ_n`, singular at the origin.
    Singular,
    /// `ĥ_n`, outgoing at infinity.
    Outgoing,
}

/// Value and Riccati derivative sharing one exponent:
/// `f = value · e^s`, `(z f)' = ric · e^s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledPair {
    pub value: Complex64,
    pub ric: Complex64,
    pub log_scale: f64,
}

impl ScaledPair {
    pub fn value_scaled(&self) -> Scaled {
        Scaled::new(self.value, self.log_scale)
    }

    pub fn ric_scaled(&self) -> Scaled {
        Scaled::new(self.ric, self.log_scale)
    }
}

/// `ĵ_n`, `ŷ_n` and their Riccati derivatives at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedRadialPair {
    pub n: usize,
    pub z: Complex64,
    pub j: ScaledPair,
    pub y: ScaledPair,
}

impl NormalizedRadialPair {
    pub fn hat_j(&self) -> Complex64 {
        self.j.value_scaled().value()
    }

    pub fn hat_y(&self) -> Complex64 {
        self.y.value_scaled().value()
    }

    pub fn hat_j_ric(&self) -> Complex64 {
        self.j.ric_scaled().value()
    }

    pub fn hat_y_ric(&self) -> Complex64 {
        self.y.ric_scaled().value()
    }

    /// `ĵ ŷ' - ĵ' ŷ`, which equals `-(2n+1)/z²`.
    ///
    /// Formed from the scaled parts, so it stays finite even when the
    /// individual functions do not fit in a double.
    pub fn wronskian(&self) -> Complex64 {
        let z = self.z;
        // f' = ((z f)' - f) / z
        let (j, jr) = (self.j.value, self.j.ric);
        let (y, yr) = (self.y.value, self.y.ric);
        let jd = (jr - j) / z;
        let yd = (yr - y) / z;
        (j * yd - jd * y) * (self.j.log_scale + self.y.log_scale).exp()
    }
}

/// `ln (2k+1)!!`, with `ln (-1)!! = 0`.
pub fn ln_double_factorial_odd(k: isize) -> f64 {
    // products are exact to a few ulps; only take logs when they get large
    let mut acc = 0.0;
    let mut p = 1.0f64;
    for i in 0..=k {
        p *= (2 * i + 1) as f64;
        if p > 1e280 {
            acc += p.ln();
            p = 1.0;
        }
    }
    acc + p.ln()
}

/// Evaluate `ĵ_n`, `ŷ_n` and their Riccati derivatives at `z`.
pub fn eval_radial_pair(n: i64, z: Complex64) -> Result<NormalizedRadialPair> {
    if n < 0 {
        return Err(Error::domain(format!("negative order {n}")));
    }
    let n = n as usize;
    Ok(NormalizedRadialPair {
        n,
        z,
        j: radial(RadialKind::Regular, n, z)?,
        y: radial(RadialKind::Singular, n, z)?,
    })
}

/// Evaluate one normalized radial function and its Riccati derivative.
pub fn radial(kind: RadialKind, n: usize, z: Complex64) -> Result<ScaledPair> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::domain(format!("radial function at z = {z}")));
    }
    Ok(match kind {
        RadialKind::Regular => regular(n, z),
        RadialKind::Singular => {
            let (s, c, t) = sin_cos_scaled(z);
            upward(n, z, c / z, c / (z * z) + s / z, -s, t)
        }
        RadialKind::Outgoing => {
            // e^{iz} = e^{-Im z} e^{i Re z}
            let e = Complex64::from_polar(1.0, z.re);
            let i = Complex64::i();
            upward(n, z, e / z, e * (1.0 - i * z) / (z * z), i * e, -z.im)
        }
    })
}

/// Upward recurrence `f_{k+1} = f_k / z - f_{k-1} / ((2k+1)(2k-1))`, shared by
/// `ŷ` and `ĥ`. `ric0` is `(z f_0)'`; every input carries the scale `e^{t}`.
fn upward(
    n: usize,
    z: Complex64,
    f0: Complex64,
    f1: Complex64,
    ric0: Complex64,
    t: f64,
) -> ScaledPair {
    if n == 0 {
        return ScaledPair {
            value: f0,
            ric: ric0,
            log_scale: t,
        };
    }
    let mut prev = f0;
    let mut cur = f1;
    let mut log = t;
    for k in 1..n {
        let kf = k as f64;
        let next = cur / z - prev / ((2.0 * kf + 1.0) * (2.0 * kf - 1.0));
        prev = cur;
        cur = next;
        let a = cur.norm();
        if !(1e-200..=1e200).contains(&a) && a > 0.0 {
            prev /= a;
            cur /= a;
            log += a.ln();
        }
    }
    let nf = n as f64;
    ScaledPair {
        value: cur,
        ric: z * prev / (2.0 * nf - 1.0) - nf * cur,
        log_scale: log,
    }
}

/// `ĵ_n` by Miller's downward recurrence, normalized against `j_0` or `j_1`.
fn regular(n: usize, z: Complex64) -> ScaledPair {
    let (s, c, t) = sin_cos_scaled(z);
    if n == 0 {
        return ScaledPair {
            value: s / z,
            ric: c,
            log_scale: t,
        };
    }
    let az = z.norm();
    let start = n.max(az.ceil() as usize) + 20 + (10.0 * az.cbrt()).ceil() as usize;

    // f_{k+1}, f_k with f_{start+1} = 0, f_start = 1
    let mut fp = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1.0, 0.0);
    let mut log = 0.0;
    let mut at_n = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
    if start == n {
        at_n = (f, Complex64::new(0.0, 0.0), log);
    }
    for k in (1..=start).rev() {
        let next = (2.0 * k as f64 + 1.0) / z * f - fp;
        fp = f;
        f = next;
        let a = f.norm();
        if a > 1e200 {
            fp /= a;
            f /= a;
            log += a.ln();
        }
        if k - 1 == n - 1 {
            at_n = (fp, f, log);
        }
    }
    let (f_n, f_nm1, log_n) = at_n;
    // here f = f_0, fp = f_1 (up to the common factor e^{log})
    let (j_ref, f_ref) = if az < 1.0 || f.norm() >= fp.norm() {
        (s / z, f)
    } else {
        (s / (z * z) - c / z, fp)
    };
    // keep |f_n| and |f_ref| in the exponent; their ratio may underflow
    let (an, ar) = (f_n.norm(), f_ref.norm());
    let a = j_ref / (f_ref / ar);
    let nf = n as f64;
    ScaledPair {
        value: a * (f_n / an),
        ric: a * (z * (f_nm1 / an) - nf * (f_n / an)),
        log_scale: t + log_n - log + an.ln() - ar.ln() + ln_double_factorial_odd(n as isize),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn order_zero_closed_forms() {
        let p = eval_radial_pair(0, c(0.5, 0.0)).unwrap();
        assert!((p.hat_j().re - 0.958_851_077_208_406).abs() < 1e-15);
        assert!((p.hat_y() - c(0.5f64.cos() / 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn negative_order_and_zero_argument_are_rejected() {
        assert!(eval_radial_pair(-1, c(1.0, 0.0)).is_err());
        assert!(eval_radial_pair(3, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn outgoing_matches_combination() {
        for (n, z) in [(0, c(1.3, 0.0)), (3, c(2.0, 0.1)), (7, c(5.0, 0.0))] {
            let p = eval_radial_pair(n, z).unwrap();
            let h = radial(RadialKind::Outgoing, n as usize, z).unwrap();
            let df = (ln_double_factorial_odd(n as isize)
                + ln_double_factorial_odd(n as isize - 1))
                .exp();
            let want = p.hat_y() + Complex64::i() * p.hat_j() / df;
            let got = h.value_scaled().value();
            assert!((got - want).norm() < 1e-12 * want.norm(), "{n} {z}");
        }
    }
}
