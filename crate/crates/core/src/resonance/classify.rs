//! Blow-up classification, critical-radius scans, cloaking and Cauchy
//! solvability estimates.

use super::sweep::{check_ladder, delta_sweep, SweepProblem, SweepRegions, SweepResult};
use crate::solver::basis::ClosedForm;
use crate::solver::{Polarization, SolveOptions, SphericalSource};
use crate::special::{AngularTable, RadialKind};
use crate::transform::DcmConstruction;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

/// Exponents `s` with `s ≤ BLOWUP_THRESHOLD` count as blow-up.
pub const BLOWUP_THRESHOLD: f64 = -0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Bounded,
    BlowUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub classification: Classification,
    /// Fitted `s` in `P_δ ~ δ^s`.
    pub fitted_exponent: f64,
    /// Derived prediction `1 − 2 α_s`, when the source sits at one radius
    /// `r_s ≥ r2`.
    pub predicted_exponent: Option<f64>,
    /// `α_s = ln(r3/r_s) / ln(r3/r2)`, clamped at 0 outside `B_{r3}`.
    pub alpha_s: Option<f64>,
    /// Estimated critical radius, filled in by scans.
    pub r_star_estimate: Option<f64>,
    /// `√(r2 r3)`.
    pub theoretical_r_star: f64,
    /// Estimated radius of Cauchy solvability of the source data.
    pub cauchy_radius: Option<f64>,
    /// Ladder points used by the fit.
    pub fit_points: usize,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn lsq_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    let s = sxy / sxx;
    (s, ym - s * xm)
}

/// Windowed maxima: for each window of `w` consecutive ladder points keep
/// the point with the largest value. Returns indices, deduplicated, in
/// ladder order.
pub fn windowed_maxima(values: &[f64], w: usize) -> Vec<usize> {
    let w = w.max(1).min(values.len().max(1));
    let mut idx: Vec<usize> = Vec::new();
    for start in 0..=values.len().saturating_sub(w) {
        let best = (start..start + w)
            .max_by(|a, b| values[*a].total_cmp(&values[*b]))
            .unwrap();
        if !idx.contains(&best) {
            idx.push(best);
        }
    }
    idx.sort_unstable();
    idx
}

/// Fitted exponent `s` of `p ~ δ^s` on windowed maxima of `ln p`.
pub fn fit_power_exponent(deltas: &[f64], powers: &[f64]) -> Result<(f64, usize)> {
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(powers)
        .filter(|(d, p)| **d > 0.0 && **p > 0.0 && p.is_finite())
        .map(|(d, p)| (d.ln(), p.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Indeterminate(format!(
            "need at least 4 usable ladder points, have {}",
            pts.len()
        )));
    }
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let keep = windowed_maxima(&ys, 2);
    let x: Vec<f64> = keep.iter().map(|&i| pts[i].0).collect();
    let y: Vec<f64> = keep.iter().map(|&i| pts[i].1).collect();
    if x.len() < 2 {
        return Err(Error::Indeterminate("windowed maxima collapsed to one point".into()));
    }
    Ok((lsq_slope(&x, &y).0, x.len()))
}

/// `α_s` and the derived exponent `1 − 2α_s`; `None` inside `B_{r2}`.
pub fn predicted_exponent(r2: f64, r3: f64, rs: f64) -> Option<(f64, f64)> {
    if rs < r2 {
        return None;
    }
    let alpha = ((r3 / rs).ln() / (r3 / r2).ln()).max(0.0);
    Some((alpha, 1.0 - 2.0 * alpha))
}

/// Classify the growth of the shell power along a sweep.
pub fn classify_blowup(sweep: &SweepResult) -> Result<CriticalityReport> {
    let ladder: Vec<f64> = sweep.rows.iter().map(|r| r.delta).collect();
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::domain("sweep ladder is not strictly decreasing"));
    }
    let ok: Vec<_> = sweep.successful().collect();
    if ok.len() < 4 {
        return Err(Error::Indeterminate(format!(
            "classification needs at least 4 successful ladder points, have {}",
            ok.len()
        )));
    }
    let d: Vec<f64> = ok.iter().map(|r| r.delta).collect();
    let p: Vec<f64> = ok.iter().map(|r| r.power_shell).collect();
    let (s, used) = fit_power_exponent(&d, &p)?;
    let pred = sweep
        .source_radius
        .and_then(|rs| predicted_exponent(sweep.r2, sweep.r3, rs));
    Ok(CriticalityReport {
        classification: if s <= BLOWUP_THRESHOLD {
            Classification::BlowUp
        } else {
            Classification::Bounded
        },
        fitted_exponent: s,
        predicted_exponent: pred.map(|p| p.1),
        alpha_s: pred.map(|p| p.0),
        r_star_estimate: None,
        theoretical_r_star: (sweep.r2 * sweep.r3).sqrt(),
        cauchy_radius: None,
        fit_points: used,
    })
}

/// Exterior norm divided by `√P_δ`, per ladder point.
pub fn invisibility_check(sweep: &SweepResult) -> Result<Vec<(f64, f64)>> {
    if sweep.successful().all(|r| r.power_shell == 0.0) {
        return Err(Error::Refused("nothing dissipates along the sweep".into()));
    }
    let rep = classify_blowup(sweep)?;
    if rep.classification != Classification::BlowUp {
        return Err(Error::Refused(
            "the sweep is bounded; power normalization only reveals cloaking under blow-up".into(),
        ));
    }
    Ok(sweep
        .successful()
        .map(|r| (r.delta, r.norm_exterior / r.power_shell.sqrt()))
        .collect())
}

/// Magnitudes of mode coefficients, as `(n, ln |c_n|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CoefficientTail {
    /// Finitely many modes.
    Finite(Vec<(usize, f64)>),
    /// Samples of an infinite sequence.
    Sampled(Vec<(usize, f64)>),
}

/// Largest `r₀` with `Σ n³ |c_n|² r₀^{2n} < ∞`, from a fit
/// `ln |c_n| = β n + a ln n + b` over the upper half of the samples.
pub fn cauchy_solvability(c: &CoefficientTail) -> Result<f64> {
    let s = match c {
        CoefficientTail::Finite(_) => return Ok(f64::INFINITY),
        CoefficientTail::Sampled(s) => s,
    };
    let pts: Vec<(usize, f64)> = s.iter().cloned().filter(|(_, l)| l.is_finite()).collect();
    if pts.len() < 5 {
        return Err(Error::Indeterminate(format!(
            "{} nonzero coefficients are too few to estimate a decay rate",
            pts.len()
        )));
    }
    let tail = &pts[pts.len() / 2..];
    let tail = if tail.len() < 5 { &pts[pts.len() - 5..] } else { tail };
    // normal equations for (β, a, b)
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for (n, l) in tail {
        let v = nalgebra::Vector3::new(*n as f64, (*n as f64).ln(), 1.0);
        ata += v * v.transpose();
        atb += v * *l;
    }
    let beta = match ata.lu().solve(&atb) {
        Some(x) => x[0],
        None => lsq_slope(
            &tail.iter().map(|p| p.0 as f64).collect::<Vec<_>>(),
            &tail.iter().map(|p| p.1).collect::<Vec<_>>(),
        )
        .0,
    };
    Ok((-beta).exp())
}

/// Coefficients of the source's incident field on the regular vacuum
/// solutions `(r ĵ_n, ...)` below its radius, summed over `m` and
/// polarization.
pub fn source_regular_coefficients(src: &SphericalSource, omega: f64, nmax: usize) -> Result<CoefficientTail> {
    let rs = src.radius();
    let table = match src {
        SphericalSource::PointDipole(d) => {
            Some(AngularTable::new(nmax, [d.position[0] / rs, d.position[1] / rs, d.position[2] / rs])?)
        }
        SphericalSource::SurfaceCurrent(_) => None,
    };
    let nmax = src.max_degree().map_or(nmax, |d| d.min(nmax));
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    for n in 1..=nmax {
        let mut acc: Option<f64> = None;
        for pol in Polarization::BOTH {
            let cf = ClosedForm {
                n,
                pol,
                omega,
                eps: one,
                mu: one,
                k: Complex64::new(omega, 0.0),
                kelvin: None,
            };
            let (j, lj) = cf.raw_state(RadialKind::Regular, rs)?;
            let (h, _) = cf.raw_state(RadialKind::Outgoing, rs)?;
            let det = j[0] * h[1] - h[0] * j[1];
            for (_, g) in src.jumps(n, pol, omega, one, one, table.as_ref())? {
                // b h − a j = g  ⇒  a = (h0 g1 − h1 g0) / (j0 h1 − h0 j1)
                let a = (h[0] * g[1] - h[1] * g[0]) / det;
                if a.norm() > 0.0 {
                    let l = 2.0 * (a.norm().ln() - lj);
                    acc = Some(match acc {
                        None => l,
                        Some(x) => x.max(l) + (-(x - l).abs()).exp().ln_1p(),
                    });
                }
            }
        }
        if let Some(l) = acc {
            out.push((n, 0.5 * l));
        }
    }
    Ok(match src.max_degree() {
        Some(_) => CoefficientTail::Finite(out),
        None => CoefficientTail::Sampled(out),
    })
}

/// Result of scanning dipole radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalScan {
    pub radii: Vec<f64>,
    pub reports: Vec<CriticalityReport>,
    pub sweeps: Vec<SweepResult>,
    /// Innermost adjacent pair `(BlowUp, Bounded)`.
    pub bracket: Option<(f64, f64)>,
    pub r_star_estimate: Option<f64>,
    pub theoretical_r_star: f64,
    pub note: Option<String>,
}

/// Sweep an on-axis electric dipole (radial moment) over `radii` and locate
/// the change from blow-up to boundedness.
pub fn critical_radius_scan(
    c: &DcmConstruction,
    radii: &[f64],
    ladder: &[f64],
    regions: &SweepRegions,
    opts: &SolveOptions,
) -> Result<CriticalScan> {
    check_ladder(ladder)?;
    let (r2, r3) = (c.params.r2, c.params.r3);
    if radii.is_empty() || radii.iter().any(|r| !(*r > r2 && *r < r3)) {
        return Err(Error::domain("scan radii must lie strictly between r2 and r3"));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.total_cmp(b));
    let mut reports = Vec::new();
    let mut sweeps = Vec::new();
    for &r in &radii {
        let zero = Complex64::new(0.0, 0.0);
        let src = SphericalSource::PointDipole(crate::solver::PointDipole::on_axis(
            r,
            [zero, zero, Complex64::new(1.0, 0.0)],
        ));
        let problem = SweepProblem {
            medium: c.medium.clone(),
            sources: vec![src.clone()],
            tilde: None,
        };
        let sweep = delta_sweep(&problem, ladder, regions, opts)?;
        let mut rep = classify_blowup(&sweep)?;
        let nmax = sweep.successful().map(|x| x.n_max).max().unwrap_or(40).max(40);
        rep.cauchy_radius = cauchy_solvability(&source_regular_coefficients(&src, c.params.omega, nmax)?).ok();
        reports.push(rep);
        sweeps.push(sweep);
    }
    let mut bracket = None;
    for i in 0..radii.len() - 1 {
        if reports[i].classification == Classification::BlowUp
            && reports[i + 1].classification == Classification::Bounded
        {
            bracket = Some((radii[i], radii[i + 1]));
            break;
        }
    }
    let est = bracket.map(|(a, b)| 0.5 * (a + b));
    for r in &mut reports {
        r.r_star_estimate = est;
    }
    let note = match bracket {
        Some(_) => None,
        None => Some(format!(
            "no sign change: first radius {:?}, last radius {:?}",
            reports[0].classification,
            reports[reports.len() - 1].classification
        )),
    };
    Ok(CriticalScan {
        radii,
        reports,
        sweeps,
        bracket,
        r_star_estimate: est,
        theoretical_r_star: (r2 * r3).sqrt(),
        note,
    })
}
