//! Run configuration, read from and written to TOML.

use dcm_core::media::{Annulus, LayeredMedium, RadialLayer};
use dcm_core::solver::{
    CurrentFlavor, ModeIndex, PointDipole, Polarization, SolveOptions, SphericalSource, SurfaceCurrent,
    TruncationPolicy,
};
use dcm_core::transform::{build_dc_medium_with, ConformalRadialTensor, DcmConstruction, DcmParams};
use dcm_core::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediumKind {
    /// Doubly complementary construction.
    Dcm,
    /// Same radii, vacuum everywhere and no loss.
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub r2: f64,
    pub r3: f64,
    pub r0: f64,
    pub lambda: f64,
    pub omega: f64,
    pub medium: MediumKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Dipole,
    Surface,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub n: usize,
    pub m: i64,
    pub pol: Polarization,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Distance from the origin; dipoles sit on the positive z-axis.
    pub radius: f64,
    /// Real and imaginary parts of the dipole moment.
    pub moment_re: [f64; 3],
    pub moment_im: [f64; 3],
    pub flavor: CurrentFlavor,
    /// Surface current coefficients.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub n_floor: usize,
    pub safety: f64,
    pub tail_rtol: f64,
    pub n_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regions {
    /// Outer radius `R` of the exterior annulus `B_R ∖ B_{r3}`.
    pub exterior_outer: f64,
    /// Extra annuli `[r_in, r_out]` whose norms are recorded.
    #[serde(default)]
    pub extra: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Critical {
    pub radius_start: f64,
    pub radius_stop: f64,
    pub radius_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: String,
    pub plot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub workers: Option<usize>,
    pub seed: u64,
    /// Decreasing, positive.
    pub deltas: Vec<f64>,
    /// Evaluation points for `solve`.
    pub points: Vec<[f64; 3]>,
    pub geometry: Geometry,
    pub source: SourceSpec,
    pub truncation: Truncation,
    pub regions: Regions,
    pub critical: Critical,
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: None,
            seed: 1,
            deltas: (2..=8).map(|k| 10f64.powi(-k)).collect(),
            points: vec![[0.0, 0.0, 3.0], [0.0, 0.0, 1.7], [0.3, 0.2, 0.7]],
            geometry: Geometry {
                r2: 1.0,
                r3: 2.0,
                r0: 2.0,
                lambda: 1.0,
                omega: 1.0,
                medium: MediumKind::Dcm,
            },
            source: SourceSpec {
                kind: SourceKind::Dipole,
                radius: 1.2,
                moment_re: [0.0, 0.0, 1.0],
                moment_im: [0.0; 3],
                flavor: CurrentFlavor::Electric,
                modes: Vec::new(),
            },
            truncation: Truncation {
                n_floor: 20,
                safety: 4.0,
                tail_rtol: 1e-6,
                n_cap: 600,
            },
            regions: Regions {
                exterior_outer: 4.0,
                extra: Vec::new(),
            },
            critical: Critical {
                radius_start: 1.05,
                radius_stop: 1.95,
                radius_step: 0.05,
            },
            output: Output {
                dir: "out".into(),
                plot: false,
            },
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::domain(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.r2 > 0.0 && g.r2 < g.r3 && g.r3 <= g.r0 && g.r0.is_finite()) {
            return Err(Error::domain("geometry must satisfy 0 < r2 < r3 <= r0"));
        }
        if !(g.lambda > 0.0 && g.omega > 0.0) {
            return Err(Error::domain("lambda and omega must be positive"));
        }
        dcm_core::resonance::check_ladder(&self.deltas)?;
        if !(self.regions.exterior_outer > g.r3) {
            return Err(Error::domain("regions.exterior_outer must exceed r3"));
        }
        for [a, b] in &self.regions.extra {
            if !(*a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::domain(format!("invalid region [{a}, {b}]")));
            }
        }
        let c = &self.critical;
        if !(c.radius_step > 0.0 && c.radius_start <= c.radius_stop) {
            return Err(Error::domain("critical radii must be an increasing grid with positive step"));
        }
        if self.truncation.n_floor == 0 || self.truncation.n_cap < self.truncation.n_floor {
            return Err(Error::domain("truncation needs 1 <= n_floor <= n_cap"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::domain("seed must fit in a signed 64-bit integer"));
        }
        if self.workers == Some(0) {
            return Err(Error::domain("workers must be positive"));
        }
        self.source()?.validate()
    }

    pub fn construction(&self) -> Result<DcmConstruction> {
        let g = &self.geometry;
        let p = DcmParams {
            r0: g.r0,
            ..DcmParams::new(g.r2, g.r3, g.lambda, g.omega)
        };
        build_dc_medium_with(p)
    }

    /// The medium the solves run in.
    pub fn medium(&self) -> Result<LayeredMedium> {
        let c = self.construction()?;
        Ok(match self.geometry.medium {
            MediumKind::Dcm => c.medium,
            MediumKind::Trivial => {
                let one = ConformalRadialTensor::constant(1.0);
                let layers = c
                    .medium
                    .layers
                    .iter()
                    .map(|l| RadialLayer::new(l.r_in, l.r_out, one, one, false))
                    .collect();
                let m = &c.medium;
                LayeredMedium::new(layers, m.r1, m.r2, m.r3, m.r0, m.omega, m.lambda)?
            }
        })
    }

    pub fn source(&self) -> Result<SphericalSource> {
        let s = &self.source;
        let moment: [Complex64; 3] = std::array::from_fn(|i| Complex64::new(s.moment_re[i], s.moment_im[i]));
        Ok(match s.kind {
            SourceKind::Dipole => SphericalSource::PointDipole(PointDipole {
                position: [0.0, 0.0, s.radius],
                moment,
                flavor: s.flavor,
            }),
            SourceKind::Surface => {
                if s.modes.is_empty() {
                    return Err(Error::domain("surface sources need mode coefficients"));
                }
                SphericalSource::SurfaceCurrent(SurfaceCurrent {
                    radius: s.radius,
                    flavor: s.flavor,
                    coefficients: s
                        .modes
                        .iter()
                        .map(|e| (ModeIndex::new(e.n, e.m, e.pol), Complex64::new(e.re, e.im)))
                        .collect(),
                })
            }
        })
    }

    pub fn solve_options(&self) -> SolveOptions {
        let t = &self.truncation;
        SolveOptions {
            truncation: TruncationPolicy {
                n_floor: t.n_floor,
                safety: t.safety,
                tail_rtol: t.tail_rtol,
                n_cap: t.n_cap,
                monitor: Vec::new(),
            },
            workers: self.workers,
            ..SolveOptions::default()
        }
    }

    pub fn exterior(&self) -> Annulus {
        Annulus::new(self.geometry.r3, self.regions.exterior_outer)
    }

    /// Scan radii `start, start + step, …` up to `stop`, kept strictly
    /// inside `(r2, r3)`.
    pub fn scan_radii(&self) -> Vec<f64> {
        let c = &self.critical;
        let count = ((c.radius_stop - c.radius_start) / c.radius_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                // round to the grid's decimal resolution so radii print cleanly
                let r = c.radius_start + k as f64 * c.radius_step;
                (r * 1e12).round() / 1e12
            })
            .filter(|r| *r > self.geometry.r2 && *r < self.geometry.r3)
            .collect()
    }
}
