use dcm_core::media::{power, with_loss, Annulus};
use dcm_core::solver::{solve_full, PointDipole, SolveOptions, SphericalSource};
use dcm_core::transform::{build_dc_medium, Side};
use dcm_core::Complex64;
use proptest::prelude::*;

fn dipole(rs: f64, scale: Complex64) -> SphericalSource {
    let z = Complex64::new(0.0, 0.0);
    SphericalSource::PointDipole(PointDipole::on_axis(rs, [z, z, scale]))
}

#[test]
fn zero_loss_is_the_unperturbed_medium() {
    let c = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
    let m = with_loss(&c.medium, 0.0).unwrap();
    for r in [0.1, 0.3, 0.7, 1.5, 3.0] {
        let l = c.medium.layer_at(r, Side::Inner);
        assert_eq!(m.at(r, Side::Inner), (l.eps.at(r), l.mu.at(r)));
    }
    assert!(with_loss(&c.medium, -1e-9).is_err());
}

#[test]
fn shell_coefficient_picks_up_the_loss() {
    let c = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
    let (e, m) = with_loss(&c.medium, 1e-3).unwrap().at(0.8, Side::Inner);
    let want = Complex64::new(-1.5625, 1e-3);
    assert!((e - want).norm() < 1e-14 && (m - want).norm() < 1e-14, "{e} {m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn loss_lives_on_the_shell_only(r in 0.01f64..6.0, d in 0.0f64..1.0) {
        let c = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
        let (e, m) = with_loss(&c.medium, d).unwrap().at(r, Side::Inner);
        let (e0, m0) = with_loss(&c.medium, 0.0).unwrap().at(r, Side::Inner);
        prop_assert!(e.im >= 0.0 && m.im >= 0.0);
        let shell = c.medium.layer_at(r, Side::Inner).lossy;
        let want = if shell { d } else { 0.0 };
        prop_assert!(((e - e0).im - want).abs() < 1e-15 && (e - e0).re == 0.0);
        prop_assert!(((m - m0).im - want).abs() < 1e-15 && (m - m0).re == 0.0);
    }
}

#[test]
fn power_is_quadratic_and_vanishes_without_loss() {
    let c = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
    let opts = SolveOptions::default();
    let shell = Annulus::new(0.5, 1.0);
    let k = Complex64::new(0.6, -1.7);
    let a = solve_full(&c.medium, &[dipole(1.7, Complex64::new(1.0, 0.0))], 1e-3, &opts).unwrap();
    let b = solve_full(&c.medium, &[dipole(1.7, k)], 1e-3, &opts).unwrap();
    let (pa, pb) = (power(&a, 1e-3, shell).unwrap(), power(&b, 1e-3, shell).unwrap());
    assert!(pa > 0.0);
    assert!((pb / (k.norm_sqr() * pa) - 1.0).abs() < 1e-10, "{pa} {pb}");
    assert_eq!(power(&a, 0.0, shell).unwrap(), 0.0);
}
