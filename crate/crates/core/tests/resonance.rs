mod common;

use common::trivial_medium;
use dcm_core::media::Annulus;
use dcm_core::resonance::{
    cauchy_solvability, classify_blowup, critical_radius_scan, delta_sweep, fit_power_exponent, invisibility_check,
    random_free_fields, resonant_window_scaling, source_regular_coefficients, three_sphere_check, Classification,
    CoefficientTail, FreeField, SweepProblem, SweepRegions, SweepResult, SweepRow,
};
use dcm_core::solver::{ModeIndex, PointDipole, Polarization, SolveOptions, SphericalSource};
use dcm_core::transform::build_dc_medium;
use dcm_core::{Complex64, Error};
use proptest::prelude::*;

fn ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 10f64.powi(-k)).collect()
}

fn synthetic(deltas: &[f64], p: impl Fn(f64) -> f64) -> SweepResult {
    let rows = deltas
        .iter()
        .map(|&d| SweepRow {
            delta: d,
            power_shell: p(d),
            power_br3: p(d),
            norm_exterior: 1.0,
            norm_diff_tilde: None,
            extra: vec![],
            shell_by_degree: vec![],
            n_max: 10,
            tail_estimate: 0.0,
            error: None,
        })
        .collect();
    SweepResult {
        rows,
        r2: 1.0,
        r3: 2.0,
        source_radius: None,
        point_source: false,
        shell: Annulus::new(0.5, 1.0),
        exterior: Annulus::new(2.0, 4.0),
    }
}

fn dipole(rs: f64) -> SphericalSource {
    let z = Complex64::new(0.0, 0.0);
    SphericalSource::PointDipole(PointDipole::on_axis(rs, [z, z, Complex64::new(1.0, 0.0)]))
}

#[test]
fn synthetic_power_laws_classify() {
    let d = ladder(2, 8);
    let r = classify_blowup(&synthetic(&d, |x| x.powf(-0.5))).unwrap();
    assert_eq!(r.classification, Classification::BlowUp);
    assert!((r.fitted_exponent + 0.5).abs() < 0.01);
    let r = classify_blowup(&synthetic(&d, |x| 3.0 + x)).unwrap();
    assert_eq!(r.classification, Classification::Bounded);
    assert!((r.theoretical_r_star - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn classification_needs_an_ordered_ladder() {
    let mut s = synthetic(&ladder(2, 8), |x| x.powf(-0.5));
    s.rows.swap(1, 2);
    assert!(classify_blowup(&s).is_err());
    let short = synthetic(&ladder(2, 4), |x| x.powf(-0.5));
    assert!(matches!(classify_blowup(&short), Err(Error::Indeterminate(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn pure_powers_are_recovered(s in -2.0f64..2.0, c in 1e-3f64..1e3) {
        let d = ladder(1, 9);
        let p: Vec<f64> = d.iter().map(|x| c * x.powf(s)).collect();
        let (fit, _) = fit_power_exponent(&d, &p).unwrap();
        prop_assert!((fit - s).abs() < 1e-9);
    }

    #[test]
    fn oscillation_does_not_flip_a_blowup(a in 0.0f64..0.9, k in 0.5f64..4.0) {
        let d: Vec<f64> = (0..25).map(|i| 10f64.powf(-2.0 - 0.25 * i as f64)).collect();
        let s = synthetic(&d, |x| x.powf(-0.5) * (1.0 + a * (k * x.ln()).cos()));
        prop_assert_eq!(classify_blowup(&s).unwrap().classification, Classification::BlowUp);
    }

    #[test]
    fn geometric_tails_give_their_radius(q in 0.05f64..0.95) {
        let c = CoefficientTail::Sampled((1..=40).map(|n| (n, n as f64 * q.ln())).collect());
        prop_assert!((cauchy_solvability(&c).unwrap() * q - 1.0).abs() < 1e-9);
    }
}

#[test]
fn cauchy_radius_edge_cases() {
    let finite = CoefficientTail::Finite(vec![(3, 0.0)]);
    assert_eq!(cauchy_solvability(&finite).unwrap(), f64::INFINITY);
    let few = CoefficientTail::Sampled(vec![(1, 0.0), (2, -1.0), (3, -2.0)]);
    assert!(matches!(cauchy_solvability(&few), Err(Error::Indeterminate(_))));
    for rs in [1.2, 1.7, 3.0] {
        let est = cauchy_solvability(&source_regular_coefficients(&dipole(rs), 1.0, 60).unwrap()).unwrap();
        assert!((est / rs - 1.0).abs() < 1e-2, "r_s = {rs}: {est}");
    }
}

#[test]
fn single_modes_interpolate_almost_exactly() {
    let mut worst = 0.0f64;
    for n in 1..=20 {
        for pol in Polarization::BOTH {
            let f = FreeField {
                omega: 1.0,
                modes: vec![(ModeIndex::new(n, 0, pol), Complex64::new(1.0, 0.0))],
            };
            let c = three_sphere_check(&[f], 0.5, 0.8, 1.0).unwrap().constant;
            worst = worst.max((c - 1.0).abs());
        }
    }
    assert!(worst < 1e-2, "{worst}");
    let ens = random_free_fields(30, 20, 10, 1.0, 3);
    assert!(three_sphere_check(&ens, 0.8, 0.5, 1.0).is_err());
}

#[test]
fn bounded_and_lossless_sweeps_are_refused() {
    let s = synthetic(&ladder(2, 8), |_| 2.0);
    assert!(matches!(invisibility_check(&s), Err(Error::Refused(_))));
    let p = SweepProblem::plain(trivial_medium(1.0), vec![dipole(1.2)]);
    let t = delta_sweep(&p, &ladder(2, 6), &SweepRegions::default(), &SolveOptions::default()).unwrap();
    assert!(matches!(invisibility_check(&t), Err(Error::Refused(_))));
}

#[test]
fn resonance_near_the_shell() {
    let c = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
    let regions = SweepRegions {
        exterior: Some(Annulus::new(2.0, 4.0)),
        ..SweepRegions::default()
    };
    for rs in [1.2, 1.7] {
        let p = SweepProblem::from_construction(&c, dipole(rs)).unwrap();
        let s = delta_sweep(&p, &ladder(2, 8), &regions, &SolveOptions::default()).unwrap();
        let w = resonant_window_scaling(&s).unwrap();
        let pred = w.predicted_slope.unwrap();
        assert!((w.slope / pred - 1.0).abs() < 0.2, "r_s = {rs}: {:?} slope {}", w.n_star, w.slope);
        // the mismatch with the effective field shrinks along the ladder
        let diffs: Vec<f64> = s.rows.iter().map(|r| r.norm_diff_tilde.unwrap()).collect();
        assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
        if rs < 2f64.sqrt() {
            let inv = invisibility_check(&s).unwrap();
            assert!(inv.windows(2).all(|v| v[1].1 < v[0].1), "{inv:?}");
        }
    }
}

#[test]
fn critical_length_follows_the_geometry() {
    let c = build_dc_medium(1.0, 4.0, 1.0, 1.0).unwrap();
    let radii = [1.7, 1.9, 2.1, 2.3];
    let regions = SweepRegions {
        exterior: Some(Annulus::new(4.0, 8.0)),
        ..SweepRegions::default()
    };
    let scan = critical_radius_scan(&c, &radii, &ladder(2, 8), &regions, &SolveOptions::default()).unwrap();
    assert_eq!(scan.bracket, Some((1.9, 2.1)));
    assert!((scan.r_star_estimate.unwrap() - 2.0).abs() < 1e-12);
    assert!((scan.theoretical_r_star - 2.0).abs() < 1e-15);
}
