//! Orthonormal scalar and vector spherical harmonics.
//!
//! Convention: `Y_n^m` is orthonormal over the unit sphere and carries the
//! Condon–Shortley phase, so `Y_n^{-m} = (-1)^m conj(Y_n^m)`. The vector
//! harmonics are
//!
//! ```text
//! U_n^m = ∇_S Y_n^m / √(n(n+1)),     V_n^m = x̂ × U_n^m.
//! ```
//!
//! Surface gradients are taken from the Cartesian gradient of the solid
//! harmonic `r^n Y_n^m`, which is a polynomial, so the poles need no special
//! treatment.

use crate::{CVec3, Complex64, Error, Result, Vec3};
use std::f64::consts::PI;

/// `Y`, `U`, `V` of one degree and order at one direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularBasisSample {
    pub n: usize,
    pub m: i64,
    pub direction: Vec3,
    pub y: Complex64,
    pub u: CVec3,
    pub v: CVec3,
}

/// All `Y_k^m` with `k ≤ nmax` at one direction.
#[derive(Clone, Debug)]
pub struct AngularTable {
    nmax: usize,
    direction: Vec3,
    // row k holds m = -k..=k at offset k*k + (m + k)
    y: Vec<Complex64>,
}

fn idx(k: usize, m: i64) -> usize {
    k * k + (m + k as i64) as usize
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl AngularTable {
    /// Tabulate `Y_k^m(x̂)` for `k ≤ nmax`. `x̂` is normalized internally.
    pub fn new(nmax: usize, x: Vec3) -> Result<Self> {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain("zero or non-finite direction"));
        }
        let d = [x[0] / r, x[1] / r, x[2] / r];
        let mut y = vec![czero(); (nmax + 1) * (nmax + 1)];
        let ct = d[2];
        let w = Complex64::new(d[0], d[1]);
        let mut wm = Complex64::new(1.0, 0.0);
        // q_mm = (-1)^m √((2m+1)/(4π) Π_{k≤m} (2k-1)/(2k))
        let mut qmm_sq = 1.0 / (4.0 * PI);
        for m in 0..=nmax {
            if m > 0 {
                qmm_sq *= (2 * m - 1) as f64 / (2 * m) as f64;
                wm *= w;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut q_prev = 0.0;
            let mut q = sign * ((2 * m + 1) as f64 * qmm_sq).sqrt();
            for k in m..=nmax {
                if k == m + 1 {
                    let q1 = ((2 * m + 3) as f64).sqrt() * ct * q;
                    q_prev = q;
                    q = q1;
                } else if k > m + 1 {
                    let kf = k as f64;
                    let mf = m as f64;
                    let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
                    let b = (((kf - 1.0) * (kf - 1.0) - mf * mf) * (2.0 * kf + 1.0)
                        / ((2.0 * kf - 3.0) * (kf * kf - mf * mf)))
                        .sqrt();
                    let q1 = a * ct * q - b * q_prev;
                    q_prev = q;
                    q = q1;
                }
                let val = wm * q;
                y[idx(k, m as i64)] = val;
                if m > 0 {
                    y[idx(k, -(m as i64))] = sign * val.conj();
                }
            }
        }
        Ok(AngularTable {
            nmax,
            direction: d,
            y,
        })
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    /// `Y_k^m`, zero when `|m| > k`.
    pub fn y(&self, k: usize, m: i64) -> Complex64 {
        if k > self.nmax || m.unsigned_abs() as usize > k {
            return czero();
        }
        self.y[idx(k, m)]
    }

    /// Cartesian gradient of the solid harmonic `r^n Y_n^m` at `x̂`.
    fn solid_gradient(&self, n: usize, m: i64) -> CVec3 {
        if n == 0 {
            return [czero(); 3];
        }
        let nf = n as f64;
        let mf = m as f64;
        let g = (2.0 * nf + 1.0) / (2.0 * nf - 1.0);
        let dz = (g * (nf * nf - mf * mf)).sqrt() * self.y(n - 1, m);
        // (∂x + i∂y) and (∂x - i∂y)
        let plus = (g * (nf - mf) * (nf - mf - 1.0)).max(0.0).sqrt() * self.y(n - 1, m + 1);
        let minus = -(g * (nf + mf) * (nf + mf - 1.0)).max(0.0).sqrt() * self.y(n - 1, m - 1);
        let dx = (plus + minus) / 2.0;
        let dy = (plus - minus) / Complex64::new(0.0, 2.0);
        [dx, dy, dz]
    }

    /// `(Y, U, V)` for `1 ≤ n ≤ nmax`, `|m| ≤ n`.
    pub fn sample(&self, n: usize, m: i64) -> Result<AngularBasisSample> {
        if n == 0 || n > self.nmax || m.unsigned_abs() as usize > n {
            return Err(Error::domain(format!("invalid degree/order ({n}, {m})")));
        }
        let d = self.direction;
        let y = self.y(n, m);
        let g = self.solid_gradient(n, m);
        let nf = n as f64;
        let l = (nf * (nf + 1.0)).sqrt();
        let mut u = [czero(); 3];
        for i in 0..3 {
            u[i] = (g[i] - nf * y * d[i]) / l;
        }
        let v = cross_real_complex(d, u);
        Ok(AngularBasisSample {
            n,
            m,
            direction: d,
            y,
            u,
            v,
        })
    }
}

/// `a × b` for real `a`, complex `b`.
pub fn cross_real_complex(a: Vec3, b: CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Evaluate `(Y_n^m, U_n^m, V_n^m)` at the unit vector `x̂`.
pub fn eval_angular_basis(n: i64, m: i64, x: Vec3) -> Result<AngularBasisSample> {
    if n < 1 || m.abs() > n {
        return Err(Error::domain(format!("invalid degree/order ({n}, {m})")));
    }
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if (r - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("direction not normalized: |x| = {r}")));
    }
    AngularTable::new(n as usize, x)?.sample(n as usize, m)
}
