//! Assembled field solutions: pointwise evaluation and `L²` norms.

use super::basis::LayerBasis;
use super::ode::State;
use super::solve::LayerStack;
use super::Polarization;
use crate::media::{Annulus, LayeredMedium};
use crate::special::AngularTable;
use crate::transform::Side;
use crate::{CVec3, Complex64, Error, Result, Vec3};
use std::sync::Arc;

/// Amplitudes of one `(n, pol)` for every order `m` it carries.
///
/// `amplitudes[k].1[offsets[i] + c]` multiplies column `c` of
/// `layers[i]`. The core layer has only the regular column and the
/// outermost layer only the outgoing one.
#[derive(Clone, Debug)]
pub struct ModeCoefficients {
    pub n: usize,
    pub pol: Polarization,
    pub layers: Vec<Arc<LayerBasis>>,
    pub offsets: Vec<usize>,
    pub amplitudes: Vec<(i64, Vec<Complex64>)>,
}

impl ModeCoefficients {
    /// Amplitudes of layer `i` for order `m` (zero when absent).
    pub fn layer_amplitudes(&self, m: i64, i: usize) -> Vec<Complex64> {
        let nc = self.offsets[i + 1] - self.offsets[i];
        match self.amplitudes.iter().find(|(mm, _)| *mm == m) {
            Some((_, x)) => x[self.offsets[i]..self.offsets[i] + nc].to_vec(),
            None => vec![Complex64::new(0.0, 0.0); nc],
        }
    }

    /// Trace state in layer `i` at `r` for order `m`.
    pub fn state_in(&self, m: i64, i: usize, r: f64) -> Result<State> {
        let a = self.layer_amplitudes(m, i);
        let mut s = [Complex64::new(0.0, 0.0); 2];
        if a.iter().all(|v| v.norm() == 0.0) {
            return Ok(s);
        }
        for (c, col) in self.layers[i].columns(r)?.iter().enumerate() {
            s[0] += a[c] * col[0];
            s[1] += a[c] * col[1];
        }
        Ok(s)
    }

    fn layer_index(&self, r: f64, side: Side) -> usize {
        let k = self.layers.len();
        for i in 0..k - 1 {
            let b = self.layers[i].layer.r_out;
            if (r - b).abs() <= 1e-12 * b {
                return match side {
                    Side::Inner => i,
                    Side::Outer => i + 1,
                };
            }
            if r < b {
                return i;
            }
        }
        k - 1
    }

    /// Trace state at radius `r`.
    pub fn state(&self, m: i64, r: f64, side: Side) -> Result<State> {
        self.state_in(m, self.layer_index(r, side), r)
    }

    /// Squared norm contributed by this mode over `region`, all orders.
    pub fn norm_sq(&self, region: Annulus) -> Result<f64> {
        mode_norm_sq(self, region)
    }
}

/// Number of modes kept and the estimated relative size of the rest.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    pub n_max: usize,
    pub tail_estimate: f64,
    pub converged: bool,
}

/// The truncated mode series of a radiating solution.
#[derive(Clone, Debug)]
pub struct FieldSolution {
    pub medium: LayeredMedium,
    /// Medium layers split at the source radii.
    pub stack: LayerStack,
    pub delta: f64,
    /// Sorted by `(n, pol)`.
    pub modes: Vec<ModeCoefficients>,
    pub truncation: Truncation,
}

impl FieldSolution {
    /// Trace state of mode `mode` (a member of `self.modes`) at `r`.
    pub fn state(&self, mode: &ModeCoefficients, m: i64, r: f64, side: Side) -> Result<State> {
        match self.modes.iter().find(|x| x.n == mode.n && x.pol == mode.pol) {
            Some(x) => x.state(m, r, side),
            None => Ok([Complex64::new(0.0, 0.0); 2]),
        }
    }

    pub fn mode(&self, n: usize, pol: Polarization) -> Option<&ModeCoefficients> {
        self.modes.iter().find(|x| x.n == n && x.pol == pol)
    }

    pub fn omega(&self) -> f64 {
        self.medium.omega
    }

    /// Copy keeping only degrees `n ≤ nmax`.
    pub fn truncated(&self, nmax: usize) -> FieldSolution {
        let mut s = self.clone();
        s.modes.retain(|m| m.n <= nmax);
        s.truncation.n_max = s.truncation.n_max.min(nmax);
        s
    }

    /// Multiply every amplitude by `c`.
    pub fn scaled(&self, c: Complex64) -> FieldSolution {
        let mut s = self.clone();
        for m in &mut s.modes {
            for (_, x) in &mut m.amplitudes {
                for v in x.iter_mut() {
                    *v *= c;
                }
            }
        }
        s
    }
}

/// `(E, H)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub e: CVec3,
    pub h: CVec3,
}

fn radius(x: Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Evaluate `(E, H)` at points off the interfaces and source spheres.
pub fn field_eval(sol: &FieldSolution, points: &[Vec3]) -> Result<Vec<FieldSample>> {
    for p in points {
        if sol.stack.on_interface(radius(*p)) {
            return Err(Error::domain(format!(
                "point at r = {} lies on an interface; use field_eval_sided",
                radius(*p)
            )));
        }
    }
    points.iter().map(|p| eval_point(sol, *p, Side::Inner)).collect()
}

/// Evaluate `(E, H)`, resolving points on interfaces with `side`.
pub fn field_eval_sided(sol: &FieldSolution, points: &[Vec3], side: Side) -> Result<Vec<FieldSample>> {
    points.iter().map(|p| eval_point(sol, *p, side)).collect()
}

fn eval_point(sol: &FieldSolution, x: Vec3, side: Side) -> Result<FieldSample> {
    let zero = Complex64::new(0.0, 0.0);
    let mut e = [zero; 3];
    let mut h = [zero; 3];
    let r = radius(x);
    if !(r > 0.0) {
        return Err(Error::domain("field evaluation at the origin"));
    }
    let nmax = sol.modes.iter().map(|m| m.n).max().unwrap_or(0);
    if nmax == 0 {
        return Ok(FieldSample { e, h });
    }
    let dir = [x[0] / r, x[1] / r, x[2] / r];
    let table = AngularTable::new(nmax, dir)?;
    let omega = sol.omega();
    let li = sol.stack.index(r, side);
    let (eps, mu) = sol.stack.layers[li].coefficients(r, sol.delta);
    let i = Complex64::i();
    for mode in &sol.modes {
        if mode.amplitudes.is_empty() {
            continue;
        }
        let n = mode.n;
        let l = ((n * (n + 1)) as f64).sqrt();
        let cols = mode.layers[li].columns(r)?;
        for (m, _) in &mode.amplitudes {
            let a = mode.layer_amplitudes(*m, li);
            let mut s = [zero; 2];
            for (c, col) in cols.iter().enumerate() {
                s[0] += a[c] * col[0];
                s[1] += a[c] * col[1];
            }
            let b = table.sample(n, *m)?;
            let (er, eu, ev, hr, hu, hv) = match mode.pol {
                Polarization::TE => {
                    let (u, w) = (s[0], s[1]);
                    (zero, zero, u / r, i * l * u / (omega * mu * r * r), w / r, zero)
                }
                Polarization::TM => {
                    let (p, q) = (s[0], s[1]);
                    (-i * l * q / (omega * eps * r * r), p / r, zero, zero, zero, q / r)
                }
            };
            for d in 0..3 {
                e[d] += er * b.y * dir[d] + eu * b.u[d] + ev * b.v[d];
                h[d] += hr * b.y * dir[d] + hu * b.u[d] + hv * b.v[d];
            }
        }
    }
    Ok(FieldSample { e, h })
}

/// `∫_region |E|² + |H|²` contributed by one `(n, pol)`, all orders.
pub fn mode_norm_sq(mode: &ModeCoefficients, region: Annulus) -> Result<f64> {
    if !region.r_out.is_finite() {
        return Err(Error::domain("norms need a bounded region"));
    }
    let mut total = 0.0;
    if mode.amplitudes.is_empty() {
        return Ok(0.0);
    }
    for (i, b) in mode.layers.iter().enumerate() {
        let lo = region.r_in.max(b.layer.r_in);
        let hi = region.r_out.min(b.layer.r_out);
        if !(hi > lo) {
            continue;
        }
        let g = b.gram(lo, hi)?;
        let nc = b.ncols();
        for (m, _) in &mode.amplitudes {
            let a = mode.layer_amplitudes(*m, i);
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..nc {
                for q in 0..nc {
                    acc += a[p] * a[q].conj() * g[p][q];
                }
            }
            total += acc.re.max(0.0);
        }
    }
    Ok(total)
}

/// `‖(E, H)‖²_{L²(region)}` by Parseval over the modes.
pub fn norm_l2_sq(sol: &FieldSolution, region: Annulus) -> Result<f64> {
    let mut total = 0.0;
    for m in &sol.modes {
        total += mode_norm_sq(m, region)?;
    }
    Ok(total)
}

/// `‖(E, H)‖_{L²(region)}`.
pub fn norm_l2(sol: &FieldSolution, region: Annulus) -> Result<f64> {
    Ok(norm_l2_sq(sol, region)?.sqrt())
}

/// `‖(E₁, H₁) − (E₂, H₂)‖_{L²(region)}`, by radial quadrature of the
/// per-mode trace differences. The energy weight is taken from `a`'s medium,
/// so `region` should lie where both media agree.
pub fn norm_l2_diff(a: &FieldSolution, b: &FieldSolution, region: Annulus) -> Result<f64> {
    Ok(difference(a, b, region)?.sqrt())
}

fn difference(a: &FieldSolution, b: &FieldSolution, region: Annulus) -> Result<f64> {
    use crate::special::quadrature::adaptive_gk;
    let mut total = 0.0;
    let nmax = a.modes.iter().chain(&b.modes).map(|m| m.n).max().unwrap_or(0);
    // union of interfaces so quadrature never straddles a jump
    let mut cuts: Vec<f64> = a
        .stack
        .layers
        .iter()
        .chain(&b.stack.layers)
        .map(|l| l.r_out)
        .filter(|r| *r > region.r_in && *r < region.r_out)
        .collect();
    cuts.push(region.r_in);
    cuts.push(region.r_out);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(1.0));
    for n in 1..=nmax {
        for pol in Polarization::BOTH {
            let (ma, mb) = (a.mode(n, pol), b.mode(n, pol));
            let mut orders: Vec<i64> = ma
                .iter()
                .chain(mb.iter())
                .flat_map(|m| m.amplitudes.iter().map(|(o, _)| *o))
                .collect();
            orders.sort_unstable();
            orders.dedup();
            for m in orders {
                for w in cuts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let rmid = 0.5 * (lo + hi);
                    let eval = |r: f64, mc: Option<&ModeCoefficients>| -> Result<State> {
                        match mc {
                            None => Ok([Complex64::new(0.0, 0.0); 2]),
                            Some(x) => x.state(m, r, if r < rmid { Side::Outer } else { Side::Inner }),
                        }
                    };
                    let lb = a.stack.index(rmid, Side::Inner);
                    let la = &a.stack.layers[lb];
                    let v = adaptive_gk(
                        |s| {
                            let r = s.exp();
                            let sa = eval(r, ma)?;
                            let sb = eval(r, mb)?;
                            let (eps, mu) = la.coefficients(r, a.delta);
                            let wgt = super::basis::energy_weight(n, pol, a.omega(), eps, mu, r);
                            let d0 = (sa[0] - sb[0]).norm_sqr();
                            let d1 = (sa[1] - sb[1]).norm_sqr();
                            let e0 = sa[0].norm_sqr() + sb[0].norm_sqr();
                            let e1 = sa[1].norm_sqr() + sb[1].norm_sqr();
                            // the second slot sets an absolute floor, so modes that
                            // agree to rounding do not chase noise
                            Ok([(wgt[0] * d0 + wgt[1] * d1) * r, 1e-12 * (wgt[0] * e0 + wgt[1] * e1) * r])
                        },
                        lo.max(1e-300).ln(),
                        hi.ln(),
                        1e-9,
                        2000,
                    )?;
                    total += v[0];
                }
            }
        }
    }
    Ok(total)
}
