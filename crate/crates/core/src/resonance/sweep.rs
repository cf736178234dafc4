//! Loss sweeps: one full solve per `δ`, with the norms the analysis needs.

use crate::media::{Annulus, LayeredMedium};
use crate::solver::{
    norm_l2_diff, norm_l2_sq, solve_effective, solve_full_cached, BasisCache, FieldSolution, SolveOptions,
    SphericalSource,
};
use crate::transform::{build_tilde_source, DcmConstruction};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The physical problem and, when available, its loss-free effective
/// counterpart.
#[derive(Clone, Debug)]
pub struct SweepProblem {
    pub medium: LayeredMedium,
    pub sources: Vec<SphericalSource>,
    pub tilde: Option<(LayeredMedium, Vec<SphericalSource>)>,
}

impl SweepProblem {
    /// Source `j` in a doubly complementary construction; the effective
    /// problem uses `J̃` from [`build_tilde_source`].
    pub fn from_construction(c: &DcmConstruction, j: SphericalSource) -> Result<SweepProblem> {
        let tilde = build_tilde_source(&j, &c.f, &c.g, c.params.r2, c.params.r3)?;
        Ok(SweepProblem {
            medium: c.medium.clone(),
            sources: vec![j],
            tilde: Some((c.effective.clone(), tilde)),
        })
    }

    /// Source in a medium whose effective problem is itself without loss.
    pub fn plain(medium: LayeredMedium, sources: Vec<SphericalSource>) -> SweepProblem {
        let mut eff = medium.clone();
        for l in &mut eff.layers {
            l.lossy = false;
        }
        let ok = eff.layers.iter().all(|l| l.eps.c.re > 0.0 && l.mu.c.re > 0.0);
        SweepProblem {
            tilde: ok.then(|| (eff, sources.clone())),
            medium,
            sources,
        }
    }

    /// Radius of the point sources, which the norms steer clear of.
    fn point_radii(&self) -> Vec<f64> {
        self.sources
            .iter()
            .filter(|s| matches!(s, SphericalSource::PointDipole(_)))
            .map(|s| s.radius())
            .collect()
    }

    /// The single source radius, if there is exactly one source.
    pub fn source_radius(&self) -> Option<f64> {
        match self.sources.as_slice() {
            [s] => Some(s.radius()),
            _ => None,
        }
    }
}

/// Regions where the sweep records norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRegions {
    /// Defaults to the lossy layer.
    pub shell: Option<Annulus>,
    /// Defaults to `B_{r3}`.
    pub ball: Option<Annulus>,
    /// Defaults to `B_{2 r3} ∖ B_{r3}`.
    pub exterior: Option<Annulus>,
    pub extra: Vec<Annulus>,
    /// Relative half-width of the band cut out around point-source radii.
    pub exclusion: f64,
}

impl Default for SweepRegions {
    fn default() -> Self {
        SweepRegions {
            shell: None,
            ball: None,
            exterior: None,
            extra: Vec::new(),
            exclusion: 0.01,
        }
    }
}

/// One ladder point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    /// `δ ‖(E, H)‖²` over the shell; zero when the medium has no lossy layer.
    pub power_shell: f64,
    /// `δ ‖(E, H)‖²` over `B_{r3}` (point-source bands removed).
    pub power_br3: f64,
    /// `‖(E, H)‖` over the exterior region.
    pub norm_exterior: f64,
    /// `‖(E_δ, H_δ) − (Ẽ, H̃)‖` over the exterior region.
    pub norm_diff_tilde: Option<f64>,
    pub extra: Vec<f64>,
    /// Shell energy per degree `n = 1..=n_max`.
    pub shell_by_degree: Vec<f64>,
    pub n_max: usize,
    pub tail_estimate: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub r2: f64,
    pub r3: f64,
    pub source_radius: Option<f64>,
    /// Every source is a point dipole (relevant for the exponent prediction).
    pub point_source: bool,
    pub shell: Annulus,
    pub exterior: Annulus,
}

impl SweepResult {
    pub fn successful(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.ok())
    }
}

/// Pieces of `region` outside the bands `|r − r_s| < h r_s`.
pub fn excluding(region: Annulus, radii: &[f64], h: f64) -> Vec<Annulus> {
    let mut pieces = vec![region];
    for &r in radii {
        let (a, b) = (r * (1.0 - h), r * (1.0 + h));
        pieces = pieces
            .into_iter()
            .flat_map(|p| {
                if b <= p.r_in || a >= p.r_out {
                    vec![p]
                } else {
                    let mut v = Vec::new();
                    if a > p.r_in {
                        v.push(Annulus::new(p.r_in, a));
                    }
                    if b < p.r_out {
                        v.push(Annulus::new(b, p.r_out));
                    }
                    v
                }
            })
            .collect();
    }
    pieces
}

fn norm_sq_pieces(sol: &FieldSolution, pieces: &[Annulus]) -> Result<f64> {
    pieces.iter().map(|p| norm_l2_sq(sol, *p)).sum()
}

/// Check that `ladder` is strictly decreasing and positive.
pub fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::domain("loss ladder must be positive"));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::domain("loss ladder must be strictly decreasing"));
    }
    Ok(())
}

/// Solve `problem` at every `δ` of the ladder and record the norms.
pub fn delta_sweep(
    problem: &SweepProblem,
    ladder: &[f64],
    regions: &SweepRegions,
    opts: &SolveOptions,
) -> Result<SweepResult> {
    check_ladder(ladder)?;
    let m = &problem.medium;
    m.validate()?;
    let shell = regions.shell.unwrap_or_else(|| match m.lossy_layer() {
        Some(i) => Annulus::new(m.layers[i].r_in, m.layers[i].r_out),
        None => Annulus::new(m.r1, m.r2),
    });
    let ball = regions.ball.unwrap_or(Annulus::ball(m.r3));
    let exterior = regions.exterior.unwrap_or(Annulus::new(m.r3, 2.0 * m.r3));
    let radii = problem.point_radii();
    let h = regions.exclusion;
    let shell_p = excluding(shell, &radii, h);
    let ball_p = excluding(ball, &radii, h);
    let ext_p = excluding(exterior, &radii, h);
    let extra_p: Vec<Vec<Annulus>> = regions.extra.iter().map(|a| excluding(*a, &radii, h)).collect();

    if let Some((med, _)) = &problem.tilde {
        med.validate()?;
    }
    // no lossy layer means nothing dissipates, whatever δ is
    let loss = if m.lossy_layer().is_some() { 1.0 } else { 0.0 };
    let cache = BasisCache::new();
    let row = |delta: f64| -> Result<SweepRow> {
        let sol = solve_full_cached(m, &problem.sources, delta, opts, &cache)?;
        let mut by_degree = vec![0.0; sol.truncation.n_max];
        for mode in &sol.modes {
            if mode.n >= 1 && mode.n <= by_degree.len() {
                for p in &shell_p {
                    by_degree[mode.n - 1] += mode.norm_sq(*p)?;
                }
            }
        }
        let diff = match &problem.tilde {
            Some((med, src)) => {
                // compare at one truncation, else the unmatched degrees count
                // as difference
                let mut o = opts.clone();
                o.truncation.n_floor = sol.truncation.n_max;
                o.truncation.n_cap = sol.truncation.n_max;
                let t = solve_effective(med, src, &o)?;
                // the difference is smooth at the sources: no exclusion
                Some(norm_l2_diff(&sol, &t, exterior)?)
            }
            None => None,
        };
        Ok(SweepRow {
            delta,
            power_shell: loss * delta * by_degree.iter().sum::<f64>(),
            power_br3: loss * delta * norm_sq_pieces(&sol, &ball_p)?,
            norm_exterior: norm_sq_pieces(&sol, &ext_p)?.sqrt(),
            norm_diff_tilde: diff,
            extra: extra_p
                .iter()
                .map(|p| norm_sq_pieces(&sol, p).map(f64::sqrt))
                .collect::<Result<_>>()?,
            shell_by_degree: by_degree,
            n_max: sol.truncation.n_max,
            tail_estimate: sol.truncation.tail_estimate,
            error: None,
        })
    };
    let rows: Vec<SweepRow> = ladder
        .par_iter()
        .map(|&d| {
            row(d).unwrap_or_else(|e| SweepRow {
                delta: d,
                power_shell: f64::NAN,
                power_br3: f64::NAN,
                norm_exterior: f64::NAN,
                norm_diff_tilde: None,
                extra: Vec::new(),
                shell_by_degree: Vec::new(),
                n_max: 0,
                tail_estimate: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(SweepResult {
        rows,
        r2: m.r2,
        r3: m.r3,
        source_radius: problem.source_radius(),
        point_source: !problem.sources.is_empty()
            && problem.sources.iter().all(|s| matches!(s, SphericalSource::PointDipole(_))),
        shell,
        exterior,
    })
}
