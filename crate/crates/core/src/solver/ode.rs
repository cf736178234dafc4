//! Dormand–Prince 8(5,3) for small complex linear systems, stepping exactly
//! through a list of output abscissae.
//!
//! Coefficients and the step-size controller follow Hairer & Wanner's DOP853.

use crate::{Complex64, Error, Result};

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.260_015_195_876_773E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79E-2, 5.917_517_095_361_37E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685E-2, 0.0, 8.876_275_643_042_054E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        2.413_651_341_592_667E-1,
        0.0,
        -8.845_494_793_282_861E-1,
        9.248_340_032_617_92E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.703_703_703_703_703_5E-2,
        0.0,
        0.0,
        1.708_286_087_294_738_6E-1,
        1.254_676_875_668_224_2E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.7109375E-2,
        0.0,
        0.0,
        1.702_522_110_195_440_5E-1,
        6.021_653_898_045_596E-2,
        -1.7578125E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.709_200_011_850_479E-2,
        0.0,
        0.0,
        1.703_839_257_122_399_8E-1,
        1.072_620_304_463_732_8E-1,
        -1.531_943_774_862_440_2E-2,
        8.273_789_163_814_023E-3,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        6.241_109_587_160_757E-1,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -8.682_193_468_417_26E-1,
        2.759_209_969_944_671E1,
        2.015_406_755_047_789_4E1,
        -4.348_988_418_106_996E1,
        0.0,
        0.0,
        0.0,
    ],
    [
        4.776_625_364_382_643_4E-1,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -5.902_908_268_368_43E-1,
        2.123_005_144_818_119_3E1,
        1.527_923_363_288_242_3E1,
        -3.328_821_096_898_486E1,
        -2.033_120_170_850_862_7E-2,
        0.0,
        0.0,
    ],
    [
        -9.371_424_300_859_873E-1,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -1.852_006_565_999_696E1,
        2.273_948_709_935_050_5E1,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -1.053_449_546_673_725E1,
        -2.000_872_058_224_862_5,
        -1.795_893_186_311_88E1,
        2.794_888_452_941_996E1,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        1.236_056_717_579_430_3E1,
        6.433_927_460_157_636E-1,
    ],
];

const C: [f64; 12] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

const B: [f64; 12] = [
    5.429_373_411_656_876_5E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1,
    2.013_654_008_040_303_4E-1,
    4.471_061_572_777_259E-2,
];

const ER: [f64; 12] = [
    1.312_004_499_419_488E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1,
    8.192_320_648_511_571E-2,
    -2.235_530_786_388_629_4E-2,
];

const BHH: [f64; 3] = [2.440_944_881_889_764E-1, 7.338_466_882_816_118E-1, 2.205_882_352_941_176_6E-2];

pub type State = [Complex64; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    /// Accepted plus rejected steps before giving up.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

/// Solution values at the requested abscissae. `values[i] · e^{log_scale[i]}`
/// is the state at `targets[i]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub values: Vec<State>,
    pub log_scale: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
}

fn axpy(y: &State, h: f64, k: &[State; 12], coef: &[f64], upto: usize) -> State {
    let mut out = *y;
    for (j, kj) in k.iter().enumerate().take(upto) {
        let c = coef[j];
        if c != 0.0 {
            for d in 0..2 {
                out[d] += h * c * kj[d];
            }
        }
    }
    out
}

fn inf_norm(y: &State) -> f64 {
    y[0].norm().max(y[1].norm())
}

/// Integrate `y' = f(t, y)` from `t0` through every entry of `targets`
/// (monotone, in the direction of travel). `h0` is a hint for the first step.
///
/// The state is renormalized whenever it grows or shrinks by more than
/// `1e100`, the accumulated exponent being returned per target.
pub fn integrate(
    mut f: impl FnMut(f64, &State) -> State,
    t0: f64,
    y0: State,
    targets: &[f64],
    h0: f64,
    opts: OdeOptions,
) -> Result<Trajectory> {
    let mut t = t0;
    let mut y = y0;
    let mut log = 0.0;
    let mut out = Trajectory {
        values: Vec::with_capacity(targets.len()),
        log_scale: Vec::with_capacity(targets.len()),
        steps: 0,
        rejected: 0,
    };
    if targets.is_empty() {
        return Ok(out);
    }
    let dir = if targets[targets.len() - 1] >= t0 { 1.0 } else { -1.0 };
    let mut h = h0.abs().max(1e-14);
    let mut k1 = f(t, &y);
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 12];
    let expo1 = 1.0 / 8.0;
    let (safe, facc1, facc2) = (0.9, 1.0 / 0.333, 1.0 / 6.0);

    for &target in targets {
        while (target - t) * dir > 1e-15 * (t.abs() + 1.0) {
            if out.steps + out.rejected > opts.max_steps {
                return Err(Error::Integration { layer: usize::MAX, r: t });
            }
            let remaining = (target - t).abs();
            let clipped = h >= remaining;
            let hs = if clipped { remaining } else { h } * dir;
            k[0] = k1;
            for s in 1..12 {
                let ys = axpy(&y, hs, &k, &A[s], s);
                k[s] = f(t + C[s] * hs, &ys);
            }
            let y1 = axpy(&y, hs, &k, &B, 12);
            // error estimate
            let mut err = 0.0;
            let mut err2 = 0.0;
            let scale_all = inf_norm(&y).max(inf_norm(&y1));
            for d in 0..2 {
                let sk = opts.rtol * (y[d].norm().max(y1[d].norm()) + scale_all);
                let bsum: Complex64 = (0..12).map(|j| B[j] * k[j][d]).sum();
                let e2 = bsum - BHH[0] * k[0][d] - BHH[1] * k[8][d] - BHH[2] * k[11][d];
                let e: Complex64 = (0..12).map(|j| ER[j] * k[j][d]).sum();
                err2 += (e2.norm() / sk).powi(2);
                err += (e.norm() / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = hs.abs() * err * (1.0 / (2.0 * deno)).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration { layer: usize::MAX, r: t });
            }
            let fac11 = err.powf(expo1);
            let fac = (fac11 / safe).clamp(facc2, facc1);
            let hnew = hs.abs() / fac;
            if err <= 1.0 {
                out.steps += 1;
                t = if clipped { target } else { t + hs };
                y = y1;
                let a = inf_norm(&y);
                if a > 1e100 || (a < 1e-100 && a > 0.0) {
                    y[0] /= a;
                    y[1] /= a;
                    log += a.ln();
                }
                k1 = f(t, &y);
                // a clipped step says nothing about the attainable size
                if !clipped || hnew > h {
                    h = hnew;
                }
            } else {
                out.rejected += 1;
                h = hs.abs() / facc1.min(fac11 / safe);
            }
        }
        out.values.push(y);
        out.log_scale.push(log);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_to_high_accuracy() {
        // y0' = y1, y1' = -y0
        let i = Complex64::i();
        let y0 = [Complex64::new(1.0, 0.0), i];
        let targets: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let tr = integrate(|_, y| [y[1], -y[0]], 0.0, y0, &targets, 0.1, OdeOptions { rtol: 1e-13, ..Default::default() })
            .unwrap();
        for (t, (v, l)) in targets.iter().zip(tr.values.iter().zip(&tr.log_scale)) {
            let want = (i * *t).exp();
            let got = v[0] * l.exp();
            assert!((got - want).norm() < 1e-11, "t={t} {got} {want}");
        }
    }

    #[test]
    fn backward_growth_with_rescaling() {
        // y' = -300 y integrated backwards grows like e^{300 Δt}
        let tr = integrate(
            |_, y| [-300.0 * y[0], -300.0 * y[1]],
            1.0,
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            &[0.0],
            1e-3,
            OdeOptions { rtol: 1e-12, ..Default::default() },
        )
        .unwrap();
        let ln = tr.values[0][0].norm().ln() + tr.log_scale[0];
        assert!((ln - 300.0).abs() < 1e-9, "{ln}");
    }
}
