//! Gauss–Legendre rules, composite rules and adaptive Gauss–Kronrod (7, 15).

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod (7, 15) on `[a, b]` for a vector-valued integrand.
///
/// Returns the Kronrod estimate and the componentwise `|K - G|`.
fn gk15<const D: usize>(f: &mut impl FnMut(f64) -> Result<[f64; D]>, a: f64, b: f64) -> Result<([f64; D], [f64; D])> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; D];
    let mut g = [0.0; D];
    let fc = f(c)?;
    for d in 0..D {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        for d in 0..D {
            let s = f1[d] + f2[d];
            k[d] += WGK[j] * s;
            if j % 2 == 1 {
                g[d] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; D];
    for d in 0..D {
        k[d] *= h;
        g[d] *= h;
        err[d] = (k[d] - g[d]).abs();
    }
    Ok((k, err))
}

/// Adaptive Gauss–Kronrod integration of a vector-valued function.
///
/// Intervals are bisected until, for every component, the summed error
/// estimate is below `rtol · scale`, where `scale` is the integral of the
/// per-point Euclidean norm over components (so oscillating or cancelling
/// components are judged against the overall size).
pub fn adaptive_gk<const D: usize>(
    mut f: impl FnMut(f64) -> Result<[f64; D]>,
    a: f64,
    b: f64,
    rtol: f64,
    max_intervals: usize,
) -> Result<[f64; D]> {
    if a == b {
        return Ok([0.0; D]);
    }
    struct Piece<const D: usize> {
        a: f64,
        b: f64,
        val: [f64; D],
        err: [f64; D],
    }
    let eval = |f: &mut dyn FnMut(f64) -> Result<[f64; D]>, a: f64, b: f64| -> Result<Piece<D>> {
        let mut g = |x: f64| f(x);
        let (val, err) = gk15(&mut g, a, b)?;
        Ok(Piece { a, b, val, err })
    };
    let mut pieces = vec![eval(&mut f, a, b)?];
    loop {
        let mut total = [0.0; D];
        let mut errs = [0.0; D];
        for p in &pieces {
            for d in 0..D {
                total[d] += p.val[d];
                errs[d] += p.err[d];
            }
        }
        let scale: f64 = pieces
            .iter()
            .map(|p| p.val.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        let ok = errs.iter().all(|e| *e <= rtol * scale) || scale == 0.0;
        if ok {
            return Ok(total);
        }
        if pieces.len() >= max_intervals {
            return Err(Error::Integration {
                layer: usize::MAX,
                r: 0.5 * (a + b),
            });
        }
        // bisect the piece with largest error
        let (imax, _) = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.err.iter().cloned().fold(0.0, f64::max)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = pieces.swap_remove(imax);
        let m = 0.5 * (p.a + p.b);
        pieces.push(eval(&mut f, p.a, m)?);
        pieces.push(eval(&mut f, m, p.b)?);
    }
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` times a uniform
/// azimuthal grid. Exact for spherical polynomials of degree `< 2·order`
/// in `cos θ` and `< 2·order` in azimuthal frequency.
pub fn sphere_rule(order: usize) -> Vec<([f64; 3], f64)> {
    let (x, w) = gauss_legendre(order);
    let nphi = 2 * order;
    let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
    let mut out = Vec::with_capacity(order * nphi);
    for (ct, wt) in x.iter().zip(&w) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            out.push(([st * phi.cos(), st * phi.sin(), *ct], wt * dphi));
        }
    }
    out
}
