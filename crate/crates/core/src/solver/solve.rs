//! Global per-mode transmission systems and the truncated mode series.

use super::basis::{BasisOptions, LayerBasis, Position};
use super::field::{mode_norm_sq, FieldSolution, ModeCoefficients, Truncation};
use super::source::SphericalSource;
use super::{ModeIndex, Polarization};
use crate::media::{close, Annulus, LayeredMedium, RadialLayer};
use crate::special::AngularTable;
use crate::transform::{ReflectionMap, Side};
use crate::{Complex64, Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// How many modes to keep.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub n_floor: usize,
    /// `C` in `N = max(N_floor, C ln(1/δ) / ln(r3/r2))`.
    pub safety: f64,
    /// Largest accepted relative tail of the monitored norms.
    pub tail_rtol: f64,
    pub n_cap: usize,
    /// Regions whose per-mode norms drive the tail estimate. Annuli that
    /// contain a point source are skipped. Empty: the lossy layer and
    /// `(r3, 2 r3)`.
    pub monitor: Vec<Annulus>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            n_floor: 20,
            safety: 4.0,
            tail_rtol: 1e-6,
            n_cap: 600,
            monitor: Vec::new(),
        }
    }
}

impl TruncationPolicy {
    /// Initial number of modes at loss `δ`.
    pub fn n_for(&self, delta: f64, r2: f64, r3: f64) -> usize {
        let base = if delta > 0.0 && delta < 1.0 {
            (self.safety * (1.0 / delta).ln() / (r3 / r2).ln()).ceil() as usize
        } else {
            0
        };
        base.max(self.n_floor).min(self.n_cap)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub basis: BasisOptions,
    pub truncation: TruncationPolicy,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// Medium layers split at the source radii.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<RadialLayer>,
    /// Indices into the source list, per interface `layers[i].r_out`.
    pub sources_at: Vec<Vec<usize>>,
}

impl LayerStack {
    pub fn new(medium: &LayeredMedium, sources: &[SphericalSource]) -> Result<LayerStack> {
        let mut radii: Vec<f64> = Vec::new();
        for s in sources {
            s.validate()?;
            let r = s.radius();
            if medium.on_interface(r) {
                return Err(Error::domain(format!("source radius {r} lies on a material interface")));
            }
            if !radii.iter().any(|x| close(*x, r)) {
                radii.push(r);
            }
        }
        radii.sort_by(|a, b| a.total_cmp(b));
        let mut layers = Vec::new();
        let mut sources_at = Vec::new();
        for l in &medium.layers {
            let mut start = l.r_in;
            for &r in radii.iter().filter(|&&r| r > l.r_in && r < l.r_out) {
                layers.push(RadialLayer { r_in: start, r_out: r, ..*l });
                sources_at.push(
                    sources
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| close(s.radius(), r))
                        .map(|(i, _)| i)
                        .collect(),
                );
                start = r;
            }
            layers.push(RadialLayer { r_in: start, ..*l });
            sources_at.push(Vec::new());
        }
        sources_at.pop();
        Ok(LayerStack { layers, sources_at })
    }

    /// Index of the stack layer containing `r`; on an interface `side`
    /// decides.
    pub fn index(&self, r: f64, side: Side) -> usize {
        let k = self.layers.len();
        for (i, l) in self.layers.iter().enumerate().take(k - 1) {
            if close(r, l.r_out) {
                return match side {
                    Side::Inner => i,
                    Side::Outer => i + 1,
                };
            }
            if r < l.r_out {
                return i;
            }
        }
        k - 1
    }

    pub fn on_interface(&self, r: f64) -> bool {
        self.layers[..self.layers.len() - 1].iter().any(|l| close(l.r_out, r))
    }

    pub fn position(&self, i: usize) -> Position {
        if i == 0 {
            Position::Core
        } else if i + 1 == self.layers.len() {
            Position::Exterior
        } else {
            Position::Middle
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    n: usize,
    pol: Polarization,
    pos: u8,
    ps: (u8, u8, bool),
    bits: [u64; 10],
}

/// Shared store of layer bases, keyed by mode, layer and loss. Integrated
/// layers are expensive and the same shell recurs across sources.
#[derive(Default)]
pub struct BasisCache {
    map: Mutex<HashMap<Key, Arc<LayerBasis>>>,
}

impl BasisCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[allow(clippy::too_many_arguments)]
    fn get(
        &self,
        layer: &RadialLayer,
        n: usize,
        pol: Polarization,
        omega: f64,
        delta: f64,
        position: Position,
        opts: BasisOptions,
    ) -> Result<Arc<LayerBasis>> {
        let d = if layer.lossy { delta } else { 0.0 };
        let key = Key {
            n,
            pol,
            pos: position as u8,
            ps: (layer.eps.p, layer.mu.p, layer.lossy),
            bits: [
                layer.r_in.to_bits(),
                layer.r_out.to_bits(),
                layer.eps.c.re.to_bits(),
                layer.eps.c.im.to_bits(),
                layer.eps.s.to_bits(),
                layer.mu.c.re.to_bits(),
                layer.mu.c.im.to_bits(),
                layer.mu.s.to_bits(),
                d.to_bits(),
                omega.to_bits(),
            ],
        };
        if let Some(b) = self.map.lock().ok().and_then(|m| m.get(&key).cloned()) {
            return Ok(b);
        }
        let b = Arc::new(LayerBasis::build(layer, n, pol, omega, d, position, opts)?);
        if let Ok(mut m) = self.map.lock() {
            m.entry(key).or_insert_with(|| b.clone());
        }
        Ok(b)
    }
}

fn dipole_tables(sources: &[SphericalSource], nmax: usize) -> Result<Vec<Option<AngularTable>>> {
    sources
        .iter()
        .map(|s| match s {
            SphericalSource::PointDipole(d) => {
                let r = d.radius();
                let x = [d.position[0] / r, d.position[1] / r, d.position[2] / r];
                AngularTable::new(nmax, x).map(Some)
            }
            SphericalSource::SurfaceCurrent(_) => Ok(None),
        })
        .collect()
}

/// Solve every order `m` of degree `n` and polarization `pol`.
#[allow(clippy::too_many_arguments)]
fn solve_in_stack(
    stack: &LayerStack,
    n: usize,
    pol: Polarization,
    omega: f64,
    delta: f64,
    sources: &[SphericalSource],
    tables: &[Option<AngularTable>],
    cache: &BasisCache,
    opts: &BasisOptions,
) -> Result<ModeCoefficients> {
    let k = stack.layers.len();
    let mut bases = Vec::with_capacity(k);
    for (i, l) in stack.layers.iter().enumerate() {
        let b = cache
            .get(l, n, pol, omega, delta, stack.position(i), *opts)
            .map_err(|e| match e {
                Error::Integration { r, .. } => Error::Integration { layer: i, r },
                e => e,
            })?;
        bases.push(b);
    }
    let mut offsets = Vec::with_capacity(k + 1);
    let mut total = 0;
    for b in &bases {
        offsets.push(total);
        total += b.ncols();
    }
    offsets.push(total);

    // jumps, gathered per order m
    let mut orders: Vec<i64> = Vec::new();
    let mut rhs_entries: Vec<(usize, i64, [Complex64; 2])> = Vec::new();
    for (i, at) in stack.sources_at.iter().enumerate() {
        for &si in at {
            let r = stack.layers[i].r_out;
            let (eps, mu) = stack.layers[i].coefficients(r, delta);
            for (m, g) in sources[si].jumps(n, pol, omega, eps, mu, tables[si].as_ref())? {
                if !orders.contains(&m) {
                    orders.push(m);
                }
                rhs_entries.push((i, m, g));
            }
        }
    }
    orders.sort_unstable();
    let mut out = ModeCoefficients {
        n,
        pol,
        layers: bases.clone(),
        offsets: offsets.clone(),
        amplitudes: Vec::new(),
    };
    if k == 1 || orders.is_empty() {
        return Ok(out);
    }

    let rows = 2 * (k - 1);
    debug_assert_eq!(rows, total);
    let mut a = DMatrix::<Complex64>::zeros(rows, total);
    for i in 0..k - 1 {
        let r = stack.layers[i].r_out;
        for (side, li) in [(-1.0, i), (1.0, i + 1)] {
            let cols = bases[li].columns(r)?;
            for (c, v) in cols.iter().enumerate() {
                a[(2 * i, offsets[li] + c)] = v[0] * side;
                a[(2 * i + 1, offsets[li] + c)] = v[1] * side;
            }
        }
    }
    let mut b = DMatrix::<Complex64>::zeros(rows, orders.len());
    for (i, m, g) in &rhs_entries {
        let col = orders.iter().position(|x| x == m).unwrap();
        b[(2 * i, col)] += g[0];
        b[(2 * i + 1, col)] += g[1];
    }
    // row equilibration keeps interfaces with tiny columns comparable
    for rrow in 0..rows {
        let s = (0..total).map(|c| a[(rrow, c)].norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for c in 0..total {
                a[(rrow, c)] /= s;
            }
            for c in 0..orders.len() {
                b[(rrow, c)] /= s;
            }
        }
    }
    let resonance = || Error::Resonance {
        mode: ModeIndex::new(n, orders[0], pol),
    };
    let lu = a.lu();
    let diag: Vec<f64> = (0..rows).map(|i| lu.u()[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmax > 0.0) || dmin < 1e-14 * dmax {
        return Err(resonance());
    }
    let x = lu.solve(&b).ok_or_else(resonance)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(resonance());
    }
    out.amplitudes = orders
        .iter()
        .enumerate()
        .map(|(c, m)| (*m, x.column(c).iter().cloned().collect()))
        .collect();
    Ok(out)
}

/// Solve one `(n, pol)` for all orders `m` driven by `sources`.
pub fn solve_mode(
    medium: &LayeredMedium,
    n: usize,
    pol: Polarization,
    sources: &[SphericalSource],
    delta: f64,
    opts: &SolveOptions,
) -> Result<ModeCoefficients> {
    if n == 0 {
        return Err(Error::domain("mode degree must be at least 1"));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("loss must be nonnegative, got {delta}")));
    }
    let stack = LayerStack::new(medium, sources)?;
    let tables = dipole_tables(sources, n)?;
    solve_in_stack(&stack, n, pol, medium.omega, delta, sources, &tables, &BasisCache::new(), &opts.basis)
}

fn default_monitor(medium: &LayeredMedium, sources: &[SphericalSource], policy: &TruncationPolicy) -> Vec<Annulus> {
    let mut regions = policy.monitor.clone();
    if regions.is_empty() {
        if let Some(i) = medium.lossy_layer() {
            let l = medium.layers[i];
            regions.push(Annulus::new(l.r_in, l.r_out));
        }
        regions.push(Annulus::new(medium.r3, 2.0 * medium.r3));
    }
    let point_radii: Vec<f64> = sources
        .iter()
        .filter(|s| matches!(s, SphericalSource::PointDipole(_)))
        .map(|s| s.radius())
        .collect();
    let clean = |a: &Annulus| point_radii.iter().all(|&r| r < a.r_in || r > a.r_out);
    let mut kept: Vec<Annulus> = regions.iter().filter(|a| clean(a)).cloned().collect();
    if kept.is_empty() {
        let r = point_radii.iter().cloned().fold(f64::INFINITY, f64::min);
        kept.push(Annulus::new(0.25 * r, 0.75 * r));
    }
    kept
}

/// Relative size of the unresolved tail from the last monitored degrees.
fn tail_estimate(per_degree: &[f64]) -> f64 {
    let total: f64 = per_degree.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let k = per_degree.len().min(6);
    let last = &per_degree[per_degree.len() - k..];
    if last.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    if k < 3 || last.iter().any(|v| *v <= 0.0) {
        return f64::INFINITY;
    }
    // least-squares slope of ln m_n over the window
    let xs: Vec<f64> = (0..k).map(|i| i as f64).collect();
    let ys: Vec<f64> = last.iter().map(|v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / k as f64;
    let ym = ys.iter().sum::<f64>() / k as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let q = (num / den).exp();
    if q >= 1.0 {
        return f64::INFINITY;
    }
    // fitted value at the last degree, robust against even/odd oscillation
    let lastv = (ym + num / den * (xs[k - 1] - xm)).exp();
    lastv * q / (1.0 - q) / total
}

fn run_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::domain(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Solve the truncated mode series for `sources` in `medium` at loss `δ`.
pub fn solve_full(
    medium: &LayeredMedium,
    sources: &[SphericalSource],
    delta: f64,
    opts: &SolveOptions,
) -> Result<FieldSolution> {
    solve_full_cached(medium, sources, delta, opts, &BasisCache::new())
}

/// [`solve_full`] sharing layer bases through `cache`.
pub fn solve_full_cached(
    medium: &LayeredMedium,
    sources: &[SphericalSource],
    delta: f64,
    opts: &SolveOptions,
    cache: &BasisCache,
) -> Result<FieldSolution> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("loss must be nonnegative, got {delta}")));
    }
    medium.validate()?;
    let active: Vec<SphericalSource> = sources.iter().filter(|s| !s.is_zero()).cloned().collect();
    let stack_active = LayerStack::new(medium, &active)?;
    let policy = &opts.truncation;
    let finite: Option<usize> = active.iter().map(|s| s.max_degree()).try_fold(0usize, |acc, d| d.map(|d| acc.max(d)));

    let mut sol = FieldSolution {
        medium: medium.clone(),
        stack: stack_active.clone(),
        delta,
        modes: Vec::new(),
        truncation: Truncation {
            n_max: 0,
            tail_estimate: 0.0,
            converged: true,
        },
    };
    if active.is_empty() {
        return Ok(sol);
    }
    // the active stack has at least one interface per source
    let stack = stack_active;
    let monitor = default_monitor(medium, &active, policy);
    let solve_range = |lo: usize, hi: usize| -> Result<Vec<ModeCoefficients>> {
        let tables = dipole_tables(&active, hi)?;
        let jobs: Vec<(usize, Polarization)> =
            (lo..=hi).flat_map(|n| Polarization::BOTH.into_iter().map(move |p| (n, p))).collect();
        run_pool(opts.workers, || {
            jobs.par_iter()
                .map(|&(n, pol)| {
                    solve_in_stack(&stack, n, pol, medium.omega, delta, &active, &tables, cache, &opts.basis)
                })
                .collect::<Result<Vec<_>>>()
        })?
    };

    match finite {
        Some(nmax) => {
            sol.modes = solve_range(1, nmax.max(1))?;
            sol.truncation.n_max = nmax;
        }
        None => {
            // without a lossy layer the loss plays no role in the fields
            let d_eff = if medium.lossy_layer().is_some() { delta } else { 0.0 };
            let mut n = policy.n_for(d_eff, medium.r2, medium.r3).max(1);
            let mut modes = solve_range(1, n)?;
            let mut per_degree: Vec<f64> = Vec::new();
            loop {
                for d in per_degree.len() + 1..=n {
                    let mut acc = 0.0;
                    for mode in modes.iter().filter(|m| m.n == d) {
                        for reg in &monitor {
                            acc += mode_norm_sq(mode, *reg)?;
                        }
                    }
                    per_degree.push(acc);
                }
                let tail = tail_estimate(&per_degree);
                sol.truncation = Truncation {
                    n_max: n,
                    tail_estimate: tail,
                    converged: tail <= policy.tail_rtol,
                };
                if tail <= policy.tail_rtol || n >= policy.n_cap {
                    break;
                }
                let next = ((n as f64 * 1.5).ceil() as usize).min(policy.n_cap);
                modes.extend(solve_range(n + 1, next)?);
                n = next;
            }
            sol.modes = modes;
        }
    }
    sol.stack = stack;
    Ok(sol)
}

/// Radiating solution of the loss-free effective problem.
pub fn solve_effective(
    effective: &LayeredMedium,
    sources: &[SphericalSource],
    opts: &SolveOptions,
) -> Result<FieldSolution> {
    if effective.lossy_layer().is_some() || effective.layers.iter().any(|l| l.eps.at(mid(l)).re <= 0.0) {
        return Err(Error::domain("effective medium must be positive and loss free"));
    }
    solve_full(effective, sources, 0.0, opts)
}

fn mid(l: &RadialLayer) -> f64 {
    if l.r_out.is_finite() {
        0.5 * (l.r_in + l.r_out)
    } else {
        l.r_in + 1.0
    }
}

/// The `δ → 0` limit fields in `target`: the effective fields outside `r2`,
/// their pull-back through `f` on the shell and through `f` then `g` inside
/// `r1`.
///
/// Only sources outside `B_{r3}` are accepted.
pub fn extend_limit_fields(
    tilde: &FieldSolution,
    target: &LayeredMedium,
    f: &ReflectionMap,
    g: &ReflectionMap,
) -> Result<FieldSolution> {
    let (r1, r2, r3) = (target.r1, target.r2, target.r3);
    for (i, l) in tilde.stack.layers[..tilde.stack.layers.len() - 1].iter().enumerate() {
        if !tilde.stack.sources_at[i].is_empty() && l.r_out <= r3 * (1.0 + 1e-12) {
            return Err(Error::Refused(format!(
                "source at r = {} inside B_r3: the limit is only extended for sources outside the \
                 outer complementary ball",
                l.r_out
            )));
        }
    }
    let trivial = matches!(f, ReflectionMap::Identity) && matches!(g, ReflectionMap::Identity);
    let fg = f.then(g);
    let map_for = |r: f64| -> &ReflectionMap {
        if trivial || r >= r2 {
            &ReflectionMap::Identity
        } else if r >= r1 {
            f
        } else {
            &fg
        }
    };
    // the target stack carries the same source interfaces as tilde
    let mut layers = Vec::new();
    let mut sources_at = Vec::new();
    let cuts: Vec<(f64, Vec<usize>)> = tilde
        .stack
        .layers
        .iter()
        .zip(&tilde.stack.sources_at)
        .filter(|(_, s)| !s.is_empty())
        .map(|(l, s)| (l.r_out, s.clone()))
        .collect();
    for l in &target.layers {
        let mut start = l.r_in;
        for (r, s) in cuts.iter().filter(|(r, _)| *r > l.r_in && *r < l.r_out) {
            layers.push(RadialLayer { r_in: start, r_out: *r, ..*l });
            sources_at.push(s.clone());
            start = *r;
        }
        layers.push(RadialLayer { r_in: start, ..*l });
        sources_at.push(Vec::new());
    }
    sources_at.pop();
    let stack = LayerStack { layers, sources_at };
    let opts = BasisOptions::default();
    let omega = target.omega;
    let mut modes = Vec::with_capacity(tilde.modes.len());
    for tm in &tilde.modes {
        let mut bases = Vec::new();
        let mut offsets = Vec::new();
        let mut total = 0;
        for (i, l) in stack.layers.iter().enumerate() {
            let b = Arc::new(LayerBasis::build(l, tm.n, tm.pol, omega, 0.0, stack.position(i), opts)?);
            offsets.push(total);
            total += b.ncols();
            bases.push(b);
        }
        offsets.push(total);
        let mut amplitudes = Vec::new();
        for (m, _) in &tm.amplitudes {
            let mut x = vec![Complex64::new(0.0, 0.0); total];
            for (i, b) in bases.iter().enumerate() {
                let l = stack.layers[i];
                let map = map_for(mid(&l));
                // anchors at both ends of the layer (finite ones), sampled
                // on the layer's side and mapped into the tilde stack
                let mut pts = Vec::new();
                if l.r_in > 0.0 {
                    pts.push((l.r_in, Side::Outer));
                }
                if l.r_out.is_finite() {
                    pts.push((l.r_out, Side::Inner));
                }
                let mut rows: Vec<[Complex64; 2]> = Vec::new();
                let mut vals: Vec<Complex64> = Vec::new();
                for (r, side) in pts {
                    let t = map.radial_image(r)?;
                    let tside = if map.orientation() < 0 { side.flipped() } else { side };
                    let s = tilde.state(tm, *m, t, tside)?;
                    let cols = b.columns(r)?;
                    // equilibrate: the two ends can differ by r^(2n+1), and
                    // each should be matched to relative precision
                    let mag = (s[0].norm_sqr() + s[1].norm_sqr()).sqrt();
                    let cmag = cols.iter().map(|c| (c[0].norm_sqr() + c[1].norm_sqr()).sqrt()).fold(0.0, f64::max);
                    let w = if mag > 0.0 { 1.0 / mag } else if cmag > 0.0 { 1.0 / cmag } else { 1.0 };
                    for d in 0..2 {
                        let mut row = [Complex64::new(0.0, 0.0); 2];
                        for (c, col) in cols.iter().enumerate() {
                            row[c] = col[d] * w;
                        }
                        rows.push(row);
                        vals.push(s[d] * w);
                    }
                }
                let nc = b.ncols();
                let am = DMatrix::from_fn(rows.len(), nc, |i, j| rows[i][j]);
                let bv = DMatrix::from_fn(vals.len(), 1, |i, _| vals[i]);
                let sol = am
                    .svd(true, true)
                    .solve(&bv, 1e-300)
                    .map_err(|e| Error::domain(format!("limit extension: {e}")))?;
                for c in 0..nc {
                    x[offsets[i] + c] = sol[(c, 0)];
                }
            }
            amplitudes.push((*m, x));
        }
        modes.push(ModeCoefficients {
            n: tm.n,
            pol: tm.pol,
            layers: bases,
            offsets,
            amplitudes,
        });
    }
    Ok(FieldSolution {
        medium: target.clone(),
        stack,
        delta: 0.0,
        modes,
        truncation: tilde.truncation.clone(),
    })
}
