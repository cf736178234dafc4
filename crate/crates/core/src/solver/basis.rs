//! Fundamental solutions of the per-mode radial system in one layer.
//!
//! For a mode of degree `n` (`L = √(n(n+1))`) the tangential traces obey
//!
//! ```text
//! TE, (u, w) = (r e_V, r h_U):  u' = -iωμ w,                 w' = i(L²/(ωμr²) - ωε) u
//! TM, (p, q) = (r e_U, r h_V):  p' = i(ωμ - L²/(ωεr²)) q,    q' = iωε p
//! ```
//!
//! In a constant layer the solutions are `(r z(kr), i (ζz)'/(ωμ))` (TE) and
//! `(-i (ζz)'/(ωε), r z(kr))` (TM) with `z ∈ {ĵ, ŷ, ĥ}`, `k = ω√(εμ)`,
//! `Im k ≥ 0`. A layer with `(ε, μ) ∝ r⁻²` is the Kelvin image of a constant
//! layer and its solutions are `ψ(r) = Ψ(s²/r)`.
//!
//! Every column is normalized to unit size at the end of the layer where it
//! dominates, so the per-mode linear systems stay well scaled at high order.

use super::ode::{integrate, OdeOptions, State};
use super::Polarization;
use crate::media::RadialLayer;
use crate::special::quadrature::{adaptive_gk, gauss_legendre};
use crate::special::{radial, RadialKind};
use crate::{Complex64, Error, Result};
use std::cmp::Ordering;
use std::sync::OnceLock;

/// Numerical settings for layer bases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisOptions {
    pub ode: OdeOptions,
    /// Relative tolerance of the adaptive radial quadrature.
    pub quad_rtol: f64,
    /// Gauss–Legendre points per panel on integrated layers.
    pub panel_order: usize,
    /// Panel width in `ln r` is `panel_scale / max(n + 1, |k| r)`.
    pub panel_scale: f64,
    /// Use closed forms whenever available.
    pub prefer_closed_form: bool,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            ode: OdeOptions {
                rtol: 1e-13,
                ..OdeOptions::default()
            },
            quad_rtol: 1e-10,
            panel_order: 10,
            panel_scale: 1.0,
            prefer_closed_form: true,
        }
    }
}

/// Which end of the layer a column is normalized at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Inner,
    Outer,
}

/// Closed-form description of a layer: the constant medium `(eps, mu)`
/// viewed through `t = r` or `t = s²/r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub n: usize,
    pub pol: Polarization,
    pub omega: f64,
    pub eps: Complex64,
    pub mu: Complex64,
    pub k: Complex64,
    pub kelvin: Option<f64>,
}

/// Branch of `ω√(εμ)` with `Im k ≥ 0` (and `Re k ≥ 0` when real).
pub fn wavenumber(omega: f64, eps: Complex64, mu: Complex64) -> Complex64 {
    let k = omega * (eps * mu).sqrt();
    if k.im < 0.0 || (k.im == 0.0 && k.re < 0.0) {
        -k
    } else {
        k
    }
}

impl ClosedForm {
    /// Closed form for `layer` at loss `δ`, when one exists.
    pub fn for_layer(layer: &RadialLayer, n: usize, pol: Polarization, omega: f64, delta: f64) -> Option<ClosedForm> {
        let loss = if layer.lossy { delta } else { 0.0 };
        let (e, m) = (layer.eps, layer.mu);
        match (e.p, m.p) {
            (0, 0) => {
                let i = Complex64::new(0.0, loss);
                let (eps, mu) = (e.c + i, m.c + i);
                Some(ClosedForm {
                    n,
                    pol,
                    omega,
                    eps,
                    mu,
                    k: wavenumber(omega, eps, mu),
                    kelvin: None,
                })
            }
            (2, 2) if loss == 0.0 => {
                let s = e.s;
                let eps = -e.c;
                let mu = -m.c * (m.s / s).powi(2);
                Some(ClosedForm {
                    n,
                    pol,
                    omega,
                    eps,
                    mu,
                    k: wavenumber(omega, eps, mu),
                    kelvin: Some(s),
                })
            }
            _ => None,
        }
    }

    fn t(&self, r: f64) -> f64 {
        match self.kelvin {
            Some(s) => s * s / r,
            None => r,
        }
    }

    /// Unnormalized state of the `kind` solution at `r`, as
    /// `(mantissa, log scale)`.
    pub fn raw_state(&self, kind: RadialKind, r: f64) -> Result<(State, f64)> {
        let t = self.t(r);
        let zeta = self.k * t;
        let f = radial(kind, self.n, zeta)?;
        let i = Complex64::i();
        let rz = f.value * t;
        let st = match self.pol {
            Polarization::TE => [rz, i * f.ric / (self.omega * self.mu)],
            Polarization::TM => [-i * f.ric / (self.omega * self.eps), rz],
        };
        Ok((st, f.log_scale))
    }
}

fn inf_norm(s: &State) -> f64 {
    s[0].norm().max(s[1].norm())
}

fn zero_state() -> State {
    [Complex64::new(0.0, 0.0); 2]
}

/// Right-hand side of the radial system in `s = ln r`: `dψ/ds = r M(r) ψ`.
pub fn rhs(n: usize, pol: Polarization, omega: f64, layer: &RadialLayer, delta: f64, s: f64, y: &State) -> State {
    let r = s.exp();
    let (eps, mu) = layer.coefficients(r, delta);
    let i = Complex64::i();
    let l2 = (n * (n + 1)) as f64;
    match pol {
        Polarization::TE => [
            -i * omega * mu * r * y[1],
            i * (l2 / (omega * mu * r) - omega * eps * r) * y[0],
        ],
        Polarization::TM => [
            i * (omega * mu * r - l2 / (omega * eps * r)) * y[1],
            i * omega * eps * r * y[0],
        ],
    }
}

/// Energy weight: `∫_{|x|=r} |E|² + |H|² = ψ̄ᵀ W ψ` with `W` diagonal.
pub fn energy_weight(n: usize, pol: Polarization, omega: f64, eps: Complex64, mu: Complex64, r: f64) -> [f64; 2] {
    let l2 = (n * (n + 1)) as f64;
    match pol {
        Polarization::TE => [1.0 + l2 / ((omega * mu).norm_sqr() * r * r), 1.0],
        Polarization::TM => [1.0, 1.0 + l2 / ((omega * eps).norm_sqr() * r * r)],
    }
}

/// Values of the basis columns along an integrated layer.
#[derive(Clone, Debug)]
pub struct Integrated {
    /// Increasing radii, including both layer ends.
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
    pub cols: Vec<Vec<State>>,
}

#[derive(Clone, Debug)]
enum Repr {
    Closed {
        cf: ClosedForm,
        kinds: Vec<RadialKind>,
        /// `(log scale, mantissa norm)` of each column at its anchor.
        refs: Vec<(f64, f64)>,
    },
    Integrated(Integrated),
}

/// Fundamental columns of one layer for one `(n, pol, δ)`.
#[derive(Debug)]
pub struct LayerBasis {
    pub layer: RadialLayer,
    pub n: usize,
    pub pol: Polarization,
    pub omega: f64,
    pub delta: f64,
    pub anchors: Vec<Anchor>,
    repr: Repr,
    opts: BasisOptions,
    gram_full: OnceLock<[[Complex64; 2]; 2]>,
}

/// Role of a layer in the radial stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    /// Contains the origin: regular column only.
    Core,
    /// Extends to infinity: outgoing column only.
    Exterior,
    Middle,
}

impl LayerBasis {
    pub fn build(
        layer: &RadialLayer,
        n: usize,
        pol: Polarization,
        omega: f64,
        delta: f64,
        position: Position,
        opts: BasisOptions,
    ) -> Result<LayerBasis> {
        let cf = ClosedForm::for_layer(layer, n, pol, omega, delta);
        let closed_ok = cf.is_some() && (opts.prefer_closed_form || position != Position::Middle);
        let mk = |anchors: Vec<Anchor>, repr| LayerBasis {
            layer: *layer,
            n,
            pol,
            omega,
            delta,
            anchors,
            repr,
            opts,
            gram_full: OnceLock::new(),
        };
        match position {
            Position::Core | Position::Exterior => {
                let cf = match cf {
                    Some(c) if c.kelvin.is_none() => c,
                    _ => {
                        return Err(Error::domain(
                            "innermost and outermost layers must have constant coefficients",
                        ))
                    }
                };
                let (kind, anchor, r_ref) = if position == Position::Core {
                    (RadialKind::Regular, Anchor::Outer, layer.r_out)
                } else {
                    (RadialKind::Outgoing, Anchor::Inner, layer.r_in)
                };
                let (st, l) = cf.raw_state(kind, r_ref)?;
                Ok(mk(
                    vec![anchor],
                    Repr::Closed {
                        cf,
                        kinds: vec![kind],
                        refs: vec![(l, inf_norm(&st))],
                    },
                ))
            }
            Position::Middle if closed_ok => {
                let cf = cf.unwrap();
                // column 0 dominates at r_in, column 1 at r_out
                let kinds = match cf.kelvin {
                    None => vec![RadialKind::Singular, RadialKind::Regular],
                    Some(_) => vec![RadialKind::Regular, RadialKind::Singular],
                };
                let (a, la) = cf.raw_state(kinds[0], layer.r_in)?;
                let (b, lb) = cf.raw_state(kinds[1], layer.r_out)?;
                Ok(mk(
                    vec![Anchor::Inner, Anchor::Outer],
                    Repr::Closed {
                        cf,
                        kinds,
                        refs: vec![(la, inf_norm(&a)), (lb, inf_norm(&b))],
                    },
                ))
            }
            Position::Middle => {
                let integ = integrate_layer(layer, n, pol, omega, delta, &opts)?;
                Ok(mk(vec![Anchor::Inner, Anchor::Outer], Repr::Integrated(integ)))
            }
        }
    }

    pub fn ncols(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_integrated(&self) -> bool {
        matches!(self.repr, Repr::Integrated(_))
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        match &self.repr {
            Repr::Closed { cf, .. } => Some(cf),
            Repr::Integrated(_) => None,
        }
    }

    pub fn integrated(&self) -> Option<&Integrated> {
        match &self.repr {
            Repr::Integrated(i) => Some(i),
            Repr::Closed { .. } => None,
        }
    }

    /// Column `c` at radius `r` (inside the closed layer).
    pub fn column(&self, c: usize, r: f64) -> Result<State> {
        match &self.repr {
            Repr::Closed { cf, kinds, refs } => {
                let (st, l) = cf.raw_state(kinds[c], r)?;
                let f = (l - refs[c].0).exp() / refs[c].1;
                Ok([st[0] * f, st[1] * f])
            }
            Repr::Integrated(integ) => {
                // exact hit on a stored radius, otherwise march from the nearest one
                let pos = integ
                    .radii
                    .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(Ordering::Less));
                match pos {
                    Ok(i) => Ok(integ.cols[c][i]),
                    Err(i) => {
                        let i0 = if i == 0 {
                            0
                        } else if i >= integ.radii.len() {
                            integ.radii.len() - 1
                        } else if (integ.radii[i] / r).ln().abs() < (r / integ.radii[i - 1]).ln().abs() {
                            i
                        } else {
                            i - 1
                        };
                        let r0 = integ.radii[i0];
                        let y0 = integ.cols[c][i0];
                        let tr = march(&self.layer, self.n, self.pol, self.omega, self.delta, r0, y0, &[r], &self.opts)?;
                        let f = tr.1[0].exp();
                        Ok([tr.0[0][0] * f, tr.0[0][1] * f])
                    }
                }
            }
        }
    }

    /// All columns at `r`.
    pub fn columns(&self, r: f64) -> Result<Vec<State>> {
        (0..self.ncols()).map(|c| self.column(c, r)).collect()
    }

    /// `G_ij = ∫_a^b ψ_i · W · conj(ψ_j) dr` over `[a, b] ⊆ [r_in, r_out]`.
    pub fn gram(&self, a: f64, b: f64) -> Result<[[Complex64; 2]; 2]> {
        let full = a <= self.layer.r_in && b >= self.layer.r_out;
        if full {
            if let Some(g) = self.gram_full.get() {
                return Ok(*g);
            }
        }
        let g = self.gram_uncached(a.max(self.layer.r_in), b.min(self.layer.r_out))?;
        if full {
            let _ = self.gram_full.set(g);
        }
        Ok(g)
    }

    fn weight_at(&self, r: f64) -> [f64; 2] {
        let (eps, mu) = self.layer.coefficients(r, self.delta);
        energy_weight(self.n, self.pol, self.omega, eps, mu, r)
    }

    fn accumulate(nc: usize, g: &mut [[Complex64; 2]; 2], cols: &[State], w: [f64; 2], q: f64) {
        for i in 0..nc {
            for j in 0..nc {
                let v = cols[i][0] * cols[j][0].conj() * w[0] + cols[i][1] * cols[j][1].conj() * w[1];
                g[i][j] += v * q;
            }
        }
    }

    fn gram_uncached(&self, a: f64, b: f64) -> Result<[[Complex64; 2]; 2]> {
        let nc = self.ncols();
        let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
        if !(b > a) {
            return Ok(g);
        }
        match &self.repr {
            Repr::Integrated(integ) if a <= self.layer.r_in && b >= self.layer.r_out => {
                for (k, (&r, &q)) in integ.radii.iter().zip(&integ.weights).enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    let cols: Vec<State> = (0..nc).map(|c| integ.cols[c][k]).collect();
                    Self::accumulate(nc, &mut g, &cols, self.weight_at(r), q);
                }
                Ok(g)
            }
            Repr::Integrated(_) => {
                // partial layer: march the columns through a fresh rule
                let width = (b / a).ln();
                let (x, w) = gauss_legendre(self.opts.panel_order);
                let panels = panel_count(width, self.n, self.layer, self.omega, self.delta, self.opts.panel_scale);
                let h = width / panels as f64;
                let mut nodes = Vec::new();
                for p in 0..panels {
                    for (xi, wi) in x.iter().zip(&w) {
                        let s = a.ln() + h * (p as f64 + 0.5 * (xi + 1.0));
                        nodes.push((s.exp(), 0.5 * h * wi * s.exp()));
                    }
                }
                let start = self.layer.r_in.max(a);
                let mut per_col = Vec::new();
                for c in 0..nc {
                    let y0 = self.column(c, start)?;
                    let rs: Vec<f64> = nodes.iter().map(|(r, _)| *r).collect();
                    let (vals, logs) = march(&self.layer, self.n, self.pol, self.omega, self.delta, start, y0, &rs, &self.opts)?;
                    per_col.push(
                        vals.iter()
                            .zip(&logs)
                            .map(|(v, l)| [v[0] * l.exp(), v[1] * l.exp()])
                            .collect::<Vec<State>>(),
                    );
                }
                for (k, (r, q)) in nodes.iter().enumerate() {
                    let cols: Vec<State> = (0..nc).map(|c| per_col[c][k]).collect();
                    Self::accumulate(nc, &mut g, &cols, self.weight_at(*r), *q);
                }
                Ok(g)
            }
            Repr::Closed { .. } => {
                // integrate in s = ln r when the layer is bounded away from 0
                let use_log = a > 0.0;
                let (lo, hi) = if use_log { (a.ln(), b.ln()) } else { (a, b) };
                let v = adaptive_gk(
                    |x| {
                        let (r, jac) = if use_log { (x.exp(), x.exp()) } else { (x, 1.0) };
                        if r == 0.0 {
                            return Ok([0.0; 6]);
                        }
                        let cols = self.columns(r)?;
                        let w = self.weight_at(r);
                        let mut gg = [[Complex64::new(0.0, 0.0); 2]; 2];
                        Self::accumulate(nc, &mut gg, &cols, w, jac);
                        Ok([gg[0][0].re, gg[1][1].re, gg[0][1].re, gg[0][1].im, 0.0, 0.0])
                    },
                    lo,
                    hi,
                    self.opts.quad_rtol,
                    4000,
                )?;
                g[0][0] = Complex64::new(v[0], 0.0);
                if nc == 2 {
                    g[1][1] = Complex64::new(v[1], 0.0);
                    g[0][1] = Complex64::new(v[2], v[3]);
                    g[1][0] = g[0][1].conj();
                }
                Ok(g)
            }
        }
    }
}

fn panel_count(width: f64, n: usize, layer: RadialLayer, omega: f64, delta: f64, scale: f64) -> usize {
    let r_hi = if layer.r_out.is_finite() { layer.r_out } else { layer.r_in * 2.0 };
    let (e, m) = layer.coefficients(r_hi, delta);
    let kr = (omega * (e * m).sqrt()).norm() * r_hi;
    let rate = (n as f64 + 1.0).max(kr);
    ((width * rate / scale).ceil() as usize).max(1)
}

/// Integrate the radial system from `r0` through `targets`.
#[allow(clippy::too_many_arguments)]
fn march(
    layer: &RadialLayer,
    n: usize,
    pol: Polarization,
    omega: f64,
    delta: f64,
    r0: f64,
    y0: State,
    targets: &[f64],
    opts: &BasisOptions,
) -> Result<(Vec<State>, Vec<f64>)> {
    let s_targets: Vec<f64> = targets.iter().map(|r| r.ln()).collect();
    let h0 = 0.05 / (n as f64 + 1.0);
    let tr = integrate(
        |s, y| rhs(n, pol, omega, layer, delta, s, y),
        r0.ln(),
        y0,
        &s_targets,
        h0,
        opts.ode,
    )
    .map_err(|_| Error::Integration { layer: 0, r: r0 })?;
    Ok((tr.values, tr.log_scale))
}

/// Integrate both columns across a layer, storing them on a composite
/// Gauss–Legendre rule in `ln r` plus the two end points.
///
/// Column 0 is started at `r_out` and integrated inward, column 1 at `r_in`
/// outward, each in its direction of growth; both are normalized at the end
/// where they arrive. Starting data come from the loss-free closed form when
/// one exists.
pub fn integrate_layer(
    layer: &RadialLayer,
    n: usize,
    pol: Polarization,
    omega: f64,
    delta: f64,
    opts: &BasisOptions,
) -> Result<Integrated> {
    let (a, b) = (layer.r_in, layer.r_out);
    if !(a > 0.0 && b.is_finite()) {
        return Err(Error::domain("integrated layers must be bounded away from 0 and infinity"));
    }
    let width = (b / a).ln();
    let panels = panel_count(width, n, *layer, omega, delta, opts.panel_scale);
    let (x, w) = gauss_legendre(opts.panel_order);
    let h = width / panels as f64;
    let mut radii = vec![a];
    let mut weights = vec![0.0];
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let s = a.ln() + h * (p as f64 + 0.5 * (xi + 1.0));
            radii.push(s.exp());
            weights.push(0.5 * h * wi * s.exp());
        }
    }
    radii.push(b);
    weights.push(0.0);

    // starting data
    let seed = ClosedForm::for_layer(layer, n, pol, omega, 0.0)
        .or_else(|| ClosedForm::for_layer(&RadialLayer { lossy: false, ..*layer }, n, pol, omega, 0.0));
    let (start_in, start_out) = match seed {
        Some(cf) => {
            let kinds = match cf.kelvin {
                None => [RadialKind::Singular, RadialKind::Regular],
                Some(_) => [RadialKind::Regular, RadialKind::Singular],
            };
            let (y0, _) = cf.raw_state(kinds[0], b)?;
            let (y1, _) = cf.raw_state(kinds[1], a)?;
            (y1, y0)
        }
        None => {
            let one = Complex64::new(1.0, 0.0);
            ([one, one], [one, -one])
        }
    };
    let norm_start = |y: State| {
        let s = inf_norm(&y);
        [y[0] / s, y[1] / s]
    };

    // column 0: inward from b
    let inward: Vec<f64> = radii.iter().rev().skip(1).cloned().collect();
    let (v0, l0) = march(layer, n, pol, omega, delta, b, norm_start(start_out), &inward, opts)?;
    let mut c0 = vec![zero_state(); radii.len()];
    let last = radii.len() - 1;
    let (fin, fin_l) = (v0[v0.len() - 1], l0[l0.len() - 1]);
    let fin_n = inf_norm(&fin);
    // value at b relative to the normalization at a
    let sb = norm_start(start_out);
    let fb = (-fin_l).exp() / fin_n;
    c0[last] = [sb[0] * fb, sb[1] * fb];
    for (k, (v, l)) in v0.iter().zip(&l0).enumerate() {
        let f = (l - fin_l).exp() / fin_n;
        c0[last - 1 - k] = [v[0] * f, v[1] * f];
    }

    // column 1: outward from a
    let outward: Vec<f64> = radii.iter().skip(1).cloned().collect();
    let (v1, l1) = march(layer, n, pol, omega, delta, a, norm_start(start_in), &outward, opts)?;
    let mut c1 = vec![zero_state(); radii.len()];
    let (fin, fin_l) = (v1[v1.len() - 1], l1[l1.len() - 1]);
    let fin_n = inf_norm(&fin);
    let sa = norm_start(start_in);
    let fa = (-fin_l).exp() / fin_n;
    c1[0] = [sa[0] * fa, sa[1] * fa];
    for (k, (v, l)) in v1.iter().zip(&l1).enumerate() {
        let f = (l - fin_l).exp() / fin_n;
        c1[k + 1] = [v[0] * f, v[1] * f];
    }
    Ok(Integrated {
        radii,
        weights,
        cols: vec![c0, c1],
    })
}

/// Values of the fundamental columns of `layer` at `r`.
///
/// Returns the 2×2 matrix whose columns are the two fundamental solutions
/// (one column is zero for the innermost and outermost layers).
pub fn fundamental_pair(
    layer: &RadialLayer,
    n: usize,
    pol: Polarization,
    omega: f64,
    delta: f64,
    r: f64,
    position: Position,
    opts: BasisOptions,
) -> Result<[[Complex64; 2]; 2]> {
    if r <= 0.0 {
        return Err(Error::domain("fundamental pair at r = 0"));
    }
    if r < layer.r_in || r > layer.r_out {
        return Err(Error::domain(format!("r = {r} outside the layer")));
    }
    let basis = LayerBasis::build(layer, n, pol, omega, delta, position, opts)?;
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for c in 0..basis.ncols() {
        let v = basis.column(c, r)?;
        out[0][c] = v[0];
        out[1][c] = v[1];
    }
    Ok(out)
}
