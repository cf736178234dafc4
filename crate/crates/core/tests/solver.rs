mod common;

use common::{constant_medium, free_dipole, halton, trivial_medium};
use dcm_core::media::{Annulus, RadialLayer};
use dcm_core::resonance::free_field_norms_sq;
use dcm_core::resonance::FreeField;
use dcm_core::solver::{
    extend_limit_fields, field_eval, fundamental_pair, norm_l2_sq, solve_effective, solve_full, solve_mode,
    BasisOptions, CurrentFlavor, ModeIndex, PointDipole, Polarization, Position, SolveOptions, SphericalSource,
    SurfaceCurrent,
};
use dcm_core::special::quadrature::{gauss_legendre, sphere_rule};
use dcm_core::special::{radial, RadialKind};
use dcm_core::transform::{build_dc_medium, build_tilde_source, ConformalRadialTensor, Side};
use dcm_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn surface(radius: f64, flavor: CurrentFlavor, modes: &[(usize, i64, Polarization, Complex64)]) -> SphericalSource {
    SphericalSource::SurfaceCurrent(SurfaceCurrent {
        radius,
        flavor,
        coefficients: modes.iter().map(|&(n, m, p, a)| (ModeIndex::new(n, m, p), a)).collect(),
    })
}

fn rel(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    let d = ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt();
    d / (b[0].norm_sqr() + b[1].norm_sqr()).sqrt().max(1e-300)
}

#[test]
fn dipole_in_trivial_medium_is_the_free_dipole() {
    let omega = 1.0;
    let medium = trivial_medium(omega);
    let moment = [c(1.0, 0.0), c(0.0, 0.5), c(0.3, -0.2)];
    let src = SphericalSource::PointDipole(PointDipole::on_axis(3.0, moment));
    let mut opts = SolveOptions::default();
    opts.truncation.n_floor = 60;
    opts.truncation.n_cap = 60;
    let sol = solve_full(&medium, &[src], 0.0, &opts).unwrap();
    let pts = [[0.5, 0.3, 0.4], [0.2, -0.7, -0.9], [1.5, 0.0, 0.3], [0.0, 0.0, 7.0], [4.0, -3.0, 6.0]];
    let got = field_eval(&sol, &pts).unwrap();
    for (p, g) in pts.iter().zip(&got) {
        let (e, h) = free_dipole(omega, [0.0, 0.0, 3.0], moment, *p);
        let scale = e.iter().chain(&h).map(|v| v.norm()).fold(0.0, f64::max);
        for d in 0..3 {
            assert!((g.e[d] - e[d]).norm() < 1e-8 * scale, "E at {p:?}: {:?} vs {:?}", g.e, e);
            assert!((g.h[d] - h[d]).norm() < 1e-8 * scale, "H at {p:?}: {:?} vs {:?}", g.h, h);
        }
    }
}

/// Vacuum TE state `(r f, i (r f)' / ω)` of the radial function `kind`.
fn vacuum_te_state(kind: RadialKind, n: usize, omega: f64, r: f64) -> [Complex64; 2] {
    let f = radial(kind, n, c(omega * r, 0.0)).unwrap();
    let s = f.log_scale.exp();
    [f.value * s * r, Complex64::i() * f.ric * s / omega]
}

/// Classical fourth-order Runge-Kutta for the vacuum TE system
/// `u' = -iω w`, `w' = i (L²/(ω r²) − ω) u`.
fn rk4_te(n: usize, omega: f64, y0: [Complex64; 2], a: f64, b: f64, steps: usize) -> [Complex64; 2] {
    let l2 = (n * (n + 1)) as f64;
    let i = Complex64::i();
    let f = |r: f64, y: [Complex64; 2]| [-i * omega * y[1], i * (l2 / (omega * r * r) - omega) * y[0]];
    let h = (b - a) / steps as f64;
    let mut y = y0;
    for k in 0..steps {
        let r = a + k as f64 * h;
        let add = |y: [Complex64; 2], d: [Complex64; 2], t: f64| [y[0] + d[0] * t, y[1] + d[1] * t];
        let k1 = f(r, y);
        let k2 = f(r + h / 2.0, add(y, k1, h / 2.0));
        let k3 = f(r + h / 2.0, add(y, k2, h / 2.0));
        let k4 = f(r + h, add(y, k3, h));
        for j in 0..2 {
            y[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
    y
}

#[test]
fn vacuum_surface_current_matches_the_wronskian_ratio() {
    let omega = 1.0;
    let medium = constant_medium(&[0.5, 0.75, 2.0, 3.0], &[(1.0, 1.0); 5], omega);
    let (rs, cj) = (1.0, c(0.7, -0.2));
    for n in [1usize, 2, 5] {
        let src = surface(rs, CurrentFlavor::Electric, &[(n, 0, Polarization::TE, cj)]);
        let mc = solve_mode(&medium, n, Polarization::TE, &[src], 0.0, &SolveOptions::default()).unwrap();
        let j = vacuum_te_state(RadialKind::Regular, n, omega, rs);
        let h = vacuum_te_state(RadialKind::Outgoing, n, omega, rs);
        let jump = [c(0.0, 0.0), rs * cj];
        let w = j[0] * h[1] - j[1] * h[0];
        let b = (j[0] * jump[1] - j[1] * jump[0]) / w;
        let a = (h[0] * jump[1] - h[1] * jump[0]) / w;
        for r in [2.5, 3.5, 6.0] {
            let want = vacuum_te_state(RadialKind::Outgoing, n, omega, r).map(|v| v * b);
            let got = mc.state(0, r, Side::Inner).unwrap();
            assert!(rel(got, want) < 1e-10, "n={n} r={r}: {got:?} vs {want:?}");
        }
        let want = vacuum_te_state(RadialKind::Regular, n, omega, 0.6).map(|v| v * a);
        assert!(rel(mc.state(0, 0.6, Side::Inner).unwrap(), want) < 1e-10);

        // dense-grid ODE oracle: march the solver's states through the radial system
        let ode = rk4_te(n, omega, mc.state(0, 0.3, Side::Inner).unwrap(), 0.3, rs, 20_000);
        assert!(rel(ode, mc.state(0, rs, Side::Inner).unwrap()) < 1e-8, "n={n} inner march");
        let ode = rk4_te(n, omega, mc.state(0, rs, Side::Outer).unwrap(), rs, 4.0, 20_000);
        assert!(rel(ode, mc.state(0, 4.0, Side::Inner).unwrap()) < 1e-8, "n={n} outer march");
    }
}

#[test]
fn zero_source_gives_zero_coefficients() {
    let medium = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium;
    let src = surface(1.5, CurrentFlavor::Electric, &[]);
    let mc = solve_mode(&medium, 3, Polarization::TM, &[src.clone()], 1e-3, &SolveOptions::default()).unwrap();
    assert!(mc.amplitudes.iter().all(|(_, a)| a.iter().all(|v| v.norm() == 0.0)));
    let sol = solve_full(&medium, &[src], 1e-3, &SolveOptions::default()).unwrap();
    assert_eq!(norm_l2_sq(&sol, Annulus::new(0.1, 3.0)).unwrap(), 0.0);
    let f = field_eval(&sol, &[[0.3, 0.2, 1.1]]).unwrap();
    assert!(f[0].e.iter().chain(&f[0].h).all(|v| v.norm() == 0.0));
}

#[test]
fn jumps_and_continuity_are_exact() {
    let medium = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium;
    let rs = 1.5;
    let a = c(0.4, 0.9);
    for (flavor, pol) in [
        (CurrentFlavor::Electric, Polarization::TE),
        (CurrentFlavor::Electric, Polarization::TM),
        (CurrentFlavor::Magnetic, Polarization::TE),
        (CurrentFlavor::Magnetic, Polarization::TM),
    ] {
        let src = surface(rs, flavor, &[(4, -2, pol, a)]);
        let mc = solve_mode(&medium, 4, pol, &[src.clone()], 1e-3, &SolveOptions::default()).unwrap();
        let jump = src.jumps(4, pol, 1.0, c(1.0, 0.0), c(1.0, 0.0), None).unwrap()[0].1;
        let out = mc.state(-2, rs, Side::Outer).unwrap();
        let inn = mc.state(-2, rs, Side::Inner).unwrap();
        let scale = out[0].norm().max(out[1].norm()).max(jump[0].norm().max(jump[1].norm()));
        for k in 0..2 {
            assert!((out[k] - inn[k] - jump[k]).norm() < 1e-10 * scale, "{flavor:?} {pol:?}");
        }
        for b in [0.125, 0.5, 1.0, 2.0] {
            let o = mc.state(-2, b, Side::Outer).unwrap();
            let i = mc.state(-2, b, Side::Inner).unwrap();
            assert!(rel(o, i) < 1e-10, "continuity at {b}: {o:?} vs {i:?}");
        }
    }
}

#[test]
fn duality_exchanges_te_and_tm() {
    let cuts = [0.4, 0.9, 1.6, 2.4];
    let coef = [(2.0, 0.5), (1.0, 3.0), (-1.5, 0.7), (4.0, 1.0), (1.0, 1.0)];
    let dual: Vec<(f64, f64)> = coef.iter().map(|&(e, m)| (m, e)).collect();
    let (m1, m2) = (constant_medium(&cuts, &coef, 1.3), constant_medium(&cuts, &dual, 1.3));
    let a = c(1.0, 0.3);
    let te = surface(1.2, CurrentFlavor::Electric, &[(3, 1, Polarization::TE, a)]);
    let tm = surface(1.2, CurrentFlavor::Magnetic, &[(3, 1, Polarization::TM, -a)]);
    let opts = SolveOptions::default();
    let s1 = solve_mode(&m1, 3, Polarization::TE, &[te], 1e-2, &opts).unwrap();
    let s2 = solve_mode(&m2, 3, Polarization::TM, &[tm], 1e-2, &opts).unwrap();
    for r in [0.2, 0.7, 1.1, 1.3, 2.0, 3.0] {
        let [u, w] = s1.state(1, r, Side::Inner).unwrap();
        let got = s2.state(1, r, Side::Inner).unwrap();
        assert!(rel(got, [-w, u]) < 1e-12, "r={r}");
    }
    // same symmetry at the level of fundamental pairs
    let layer = |e: f64, m: f64| {
        RadialLayer::new(
            0.5,
            1.0,
            ConformalRadialTensor::conformal(e, 1.0),
            ConformalRadialTensor::conformal(m, 1.0),
            true,
        )
    };
    let opts = BasisOptions::default();
    let p = fundamental_pair(&layer(-1.0, -2.0), 5, Polarization::TE, 1.0, 1e-3, 0.7, Position::Middle, opts).unwrap();
    let q = fundamental_pair(&layer(-2.0, -1.0), 5, Polarization::TM, 1.0, 1e-3, 0.7, Position::Middle, opts).unwrap();
    // columns carry their own normalization, so compare up to a scalar
    for k in 0..2 {
        let v = [-p[1][k], p[0][k]];
        let got = [q[0][k], q[1][k]];
        let s = (v[0].conj() * got[0] + v[1].conj() * got[1]) / (v[0].norm_sqr() + v[1].norm_sqr());
        assert!(rel(got, [s * v[0], s * v[1]]) < 1e-10, "column {k}");
    }
}

#[test]
fn shell_closed_form_matches_integration() {
    let shell = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium.layers[2];
    let closed = BasisOptions::default();
    let integrated = BasisOptions {
        prefer_closed_form: false,
        ..closed
    };
    for n in [1usize, 7, 20, 50] {
        for pol in Polarization::BOTH {
            for r in [0.52, 0.7, 0.97] {
                let a = fundamental_pair(&shell, n, pol, 1.0, 0.0, r, Position::Middle, closed).unwrap();
                let b = fundamental_pair(&shell, n, pol, 1.0, 0.0, r, Position::Middle, integrated).unwrap();
                for k in 0..2 {
                    assert!(rel(b[k], a[k]) < 1e-8, "n={n} {pol:?} r={r} col {k}");
                }
            }
        }
    }
    assert!(fundamental_pair(&shell, 1, Polarization::TE, 1.0, 0.0, 0.0, Position::Middle, closed).is_err());
}

#[test]
fn single_mode_has_a_finite_lossless_limit() {
    let medium = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium;
    let src = surface(1.5, CurrentFlavor::Electric, &[(3, 0, Polarization::TE, c(1.0, 0.0))]);
    let opts = SolveOptions::default();
    let at = |d: f64| {
        let mc = solve_mode(&medium, 3, Polarization::TE, std::slice::from_ref(&src), d, &opts).unwrap();
        mc.state(0, 0.8, Side::Inner).unwrap()
    };
    let (s2, s4, s6) = (at(1e-2), at(1e-4), at(1e-6));
    let d1 = rel(s4, s2);
    let d2 = rel(s6, s4);
    // differences shrink linearly in δ toward a finite limit
    assert!(d2 < 0.05 * d1, "{d1} {d2}");
    assert!(s6[0].norm().is_finite() && s6[0].norm() < 1e3);
}

#[test]
fn rotation_about_the_axis_is_a_phase() {
    let medium = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium;
    let m = 2i64;
    let src = surface(1.5, CurrentFlavor::Electric, &[(3, m, Polarization::TM, c(0.5, 0.5))]);
    let sol = solve_full(&medium, &[src], 1e-2, &SolveOptions::default()).unwrap();
    let phi: f64 = 0.7;
    let rot = |v: [f64; 3]| [phi.cos() * v[0] - phi.sin() * v[1], phi.sin() * v[0] + phi.cos() * v[1], v[2]];
    for x in [[0.4, 0.1, 0.3], [1.2, -0.5, 0.6], [2.5, 0.3, -1.0]] {
        let a = field_eval(&sol, &[x]).unwrap()[0];
        let b = field_eval(&sol, &[rot(x)]).unwrap()[0];
        let phase = Complex64::from_polar(1.0, m as f64 * phi);
        let rc = |v: [Complex64; 3]| {
            [phi.cos() * v[0] - phi.sin() * v[1], phi.sin() * v[0] + phi.cos() * v[1], v[2]].map(|z| z * phase)
        };
        let (ea, ha) = (rc(a.e), rc(a.h));
        for k in 0..3 {
            assert!((b.e[k] - ea[k]).norm() < 1e-12 * (1.0 + ea[k].norm()));
            assert!((b.h[k] - ha[k]).norm() < 1e-12 * (1.0 + ha[k].norm()));
        }
    }
}

#[test]
fn effective_medium_has_the_shrunk_interior_wavenumber() {
    let omega = 1.0;
    let c4 = build_dc_medium(1.0, 2.0, 1.0, omega).unwrap();
    assert!((c4.rho - 4.0).abs() < 1e-15);
    assert!((c4.effective.layers[0].eps.at(0.05) - c(0.25, 0.0)).norm() < 1e-15);
    let src = surface(3.0, CurrentFlavor::Electric, &[(2, 1, Polarization::TE, c(1.0, 0.0))]);
    let opts = SolveOptions::default();
    let sol = solve_effective(&c4.effective, &[src.clone()], &opts).unwrap();
    assert!(solve_effective(&c4.medium, &[src.clone()], &opts).is_err());
    let mode = sol.mode(2, Polarization::TE).unwrap();
    // inside B1 the radial part is ĵ_2(k r) with k = ω/4
    let k = omega / 4.0;
    let u = |r: f64| mode.state(1, r, Side::Inner).unwrap()[0];
    let jr = |r: f64| {
        let f = radial(RadialKind::Regular, 2, c(k * r, 0.0)).unwrap();
        f.value * f.log_scale.exp() * r
    };
    let ratio = u(0.9) / u(0.3);
    let want = jr(0.9) / jr(0.3);
    assert!((ratio - want).norm() < 1e-10 * want.norm(), "{ratio} vs {want}");
    // integrating every middle layer gives the same field
    let mut ode = opts.clone();
    ode.basis.prefer_closed_form = false;
    let sol2 = solve_effective(&c4.effective, &[src], &ode).unwrap();
    let m2 = sol2.mode(2, Polarization::TE).unwrap();
    for r in [0.3, 0.7, 1.5, 2.5] {
        let (a, b) = (mode.state(1, r, Side::Inner).unwrap(), m2.state(1, r, Side::Inner).unwrap());
        assert!(rel(b, a) < 1e-8, "r={r}");
    }
}

#[test]
fn limit_fields_have_continuous_traces() {
    let cons = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
    let j = SphericalSource::PointDipole(PointDipole::on_axis(3.0, [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]));
    let tilde_src = build_tilde_source(&j, &cons.f, &cons.g, 1.0, 2.0).unwrap();
    let mut opts = SolveOptions::default();
    opts.truncation.n_floor = 12;
    opts.truncation.n_cap = 12;
    let tilde = solve_effective(&cons.effective, &tilde_src, &opts).unwrap();
    let lim = extend_limit_fields(&tilde, &cons.medium, &cons.f, &cons.g).unwrap();
    for mode in &lim.modes {
        for (m, _) in &mode.amplitudes {
            let scale = mode.state(*m, 2.5, Side::Inner).unwrap();
            let scale = scale[0].norm().max(scale[1].norm());
            for b in [cons.regions.r_core, 0.5, 1.0, 2.0] {
                let o = mode.state(*m, b, Side::Outer).unwrap();
                let i = mode.state(*m, b, Side::Inner).unwrap();
                let d = (o[0] - i[0]).norm().max((o[1] - i[1]).norm());
                assert!(d < 1e-8 * scale.max(o[0].norm()).max(o[1].norm()), "n={} m={m} at {b}: {d}", mode.n);
            }
        }
    }
    // outside B_{r2} the limit equals the effective field
    let p = [[0.3, 0.2, 1.4], [0.0, 1.0, 3.5]];
    let (a, b) = (field_eval(&lim, &p).unwrap(), field_eval(&tilde, &p).unwrap());
    for (x, y) in a.iter().zip(&b) {
        for k in 0..3 {
            assert!((x.e[k] - y.e[k]).norm() < 1e-8 * (1.0 + y.e[k].norm()));
        }
    }
    // sources inside the ball are out of scope
    let inner = SphericalSource::PointDipole(PointDipole::on_axis(1.5, [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
    let ts = build_tilde_source(&inner, &cons.f, &cons.g, 1.0, 2.0).unwrap();
    let t2 = solve_effective(&cons.effective, &ts, &opts).unwrap();
    assert!(extend_limit_fields(&t2, &cons.medium, &cons.f, &cons.g).is_err());
}

#[test]
fn mode_norm_matches_quasi_monte_carlo() {
    // unit ĵ-type TE mode in B1: everything inside the source sphere is regular
    let medium = constant_medium(&[1.2, 1.5, 2.0, 3.0], &[(1.0, 1.0); 5], 1.0);
    let src = surface(2.5, CurrentFlavor::Electric, &[(1, 0, Polarization::TE, c(1.0, 0.0))]);
    let sol = solve_full(&medium, &[src], 0.0, &SolveOptions::default()).unwrap();
    let exact = norm_l2_sq(&sol, Annulus::ball(1.0)).unwrap();
    let count = 1 << 16;
    let mut acc = 0.0;
    let mut inside = 0usize;
    let mut k = 1;
    while inside < count {
        let h = halton(k);
        k += 1;
        let x = [2.0 * h[0] - 1.0, 2.0 * h[1] - 1.0, 2.0 * h[2] - 1.0];
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        if r2 >= 1.0 || r2 == 0.0 {
            continue;
        }
        let f = field_eval(&sol, &[x]).unwrap()[0];
        acc += f.e.iter().chain(&f.h).map(|v| v.norm_sqr()).sum::<f64>();
        inside += 1;
    }
    let mc = acc / count as f64 * (4.0 / 3.0) * std::f64::consts::PI;
    assert!((mc - exact).abs() < 1e-3 * exact, "{mc} vs {exact}");
}

#[test]
fn parseval_matches_direct_quadrature() {
    let medium = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium;
    let src = surface(
        3.0,
        CurrentFlavor::Electric,
        &[
            (1, 0, Polarization::TE, c(1.0, 0.0)),
            (1, 1, Polarization::TM, c(0.0, 0.4)),
            (2, -1, Polarization::TE, c(0.3, 0.3)),
            (3, 2, Polarization::TM, c(-0.2, 0.1)),
            (3, -3, Polarization::TE, c(0.5, 0.0)),
        ],
    );
    let sol = solve_full(&medium, &[src], 1e-2, &SolveOptions::default()).unwrap();
    let (ra, rb) = (1.2, 1.8);
    let want = norm_l2_sq(&sol, Annulus::new(ra, rb)).unwrap();
    let sphere = sphere_rule(12);
    let (x, w) = gauss_legendre(40);
    let mut got = 0.0;
    for (t, wt) in x.iter().zip(&w) {
        let r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * t;
        let pts: Vec<[f64; 3]> = sphere.iter().map(|(d, _)| [r * d[0], r * d[1], r * d[2]]).collect();
        let f = field_eval(&sol, &pts).unwrap();
        let s: f64 = f
            .iter()
            .zip(&sphere)
            .map(|(v, (_, ws))| ws * v.e.iter().chain(&v.h).map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        got += 0.5 * (rb - ra) * wt * r * r * s;
    }
    assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
}

/// `‖E‖² + ‖H‖²` over `B_r` of the vacuum TE mode `ĵ_n(r) x̂ × ∇_S Y` with the
/// unnormalized surface gradient, so the angular factor is `n(n+1)`.
fn raw_ball_norm(n: usize, r: f64) -> f64 {
    let (x, w) = gauss_legendre(80);
    let l2 = (n * (n + 1)) as f64;
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let rho = 0.5 * r * (xi + 1.0);
        let [u, v] = vacuum_te_state(RadialKind::Regular, n, 1.0, rho);
        s += 0.5 * r * wi * ((1.0 + l2 / (rho * rho)) * u.norm_sqr() + v.norm_sqr());
    }
    l2 * s
}

#[test]
fn free_mode_norms_scale_like_n_cubed_r_to_2n() {
    // frozen band for ‖mode‖²_{B_r} / (n³ r^{2n})
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for r in [0.5, 0.8, 1.0] {
        for n in 1..=30usize {
            let q = raw_ball_norm(n, r) / ((n as f64).powi(3) * r.powi(2 * n as i32));
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    assert!(lo > 0.5 && hi < 4.0, "[{lo}, {hi}]");
}

#[test]
fn library_ball_norms_match_the_raw_modes() {
    // the library normalizes columns at r = 1; ratios over radii are convention free
    for n in [1usize, 4, 11, 25] {
        let want = raw_ball_norm(n, 0.6) / raw_ball_norm(n, 1.0);
        for pol in Polarization::BOTH {
            let f = FreeField {
                omega: 1.0,
                modes: vec![(ModeIndex::new(n, 0, pol), c(1.0, 0.0))],
            };
            let v = free_field_norms_sq(&f, &[0.6, 1.0]).unwrap();
            assert!((v[0] / v[1] / want - 1.0).abs() < 1e-8, "n={n} {pol:?}");
        }
    }
}

#[test]
fn truncation_window_controls_the_power() {
    let cons = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap();
    let delta: f64 = 1e-6;
    // n* solves ξ_n = 1, i.e. 2^{-n} = δ^{1/2}
    let n_star = (0.5 * (1.0 / delta).ln() / 2f64.ln()).ceil() as usize;
    assert_eq!(n_star, 10);
    let src = SphericalSource::PointDipole(PointDipole::on_axis(1.7, [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
    let sol = solve_full(&cons.medium, &[src], delta, &SolveOptions::default()).unwrap();
    assert!(sol.truncation.n_max >= 40, "{}", sol.truncation.n_max);
    let shell = Annulus::new(0.5, 1.0);
    let full = norm_l2_sq(&sol, shell).unwrap();
    let low = norm_l2_sq(&sol.truncated(n_star - 1), shell).unwrap();
    let high = norm_l2_sq(&sol.truncated(4 * n_star), shell).unwrap();
    assert!((full - low).abs() > 0.1 * full);
    assert!((full - high).abs() < 1e-6 * full, "{}", (full - high).abs() / full);
}

mod two_paths {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn closed_form_agrees_with_integration_on_finite_layers(
            n in 1usize..=50,
            log_delta in -8.0f64..-1.0,
            idx in 1usize..=3,
            t in 0.05f64..0.95,
            te in any::<bool>(),
        ) {
            let layer = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium.layers[idx];
            let delta = 10f64.powf(log_delta);
            let pol = if te { Polarization::TE } else { Polarization::TM };
            let r = layer.r_in + t * (layer.r_out - layer.r_in);
            let closed = BasisOptions::default();
            let integrated = BasisOptions { prefer_closed_form: false, ..closed };
            let a = fundamental_pair(&layer, n, pol, 1.0, delta, r, Position::Middle, closed).unwrap();
            let b = fundamental_pair(&layer, n, pol, 1.0, delta, r, Position::Middle, integrated).unwrap();
            for k in 0..2 {
                prop_assert!(rel(b[k], a[k]) < 1e-8, "n={} {:?} r={} δ={:e} row {}: {}", n, pol, r, delta, k, rel(b[k], a[k]));
            }
        }

        // the lossy shell has no closed form once δ > 0, so the second path
        // is an independent march of the radial system
        #[test]
        fn lossy_shell_columns_follow_the_radial_system(
            n in 1usize..=50,
            log_delta in -8.0f64..-1.0,
            te in any::<bool>(),
        ) {
            let shell = build_dc_medium(1.0, 2.0, 1.0, 1.0).unwrap().medium.layers[2];
            let delta = 10f64.powf(log_delta);
            let pol = if te { Polarization::TE } else { Polarization::TM };
            let opts = BasisOptions::default();
            let (a, b) = (0.55, 0.95);
            let pa = fundamental_pair(&shell, n, pol, 1.0, delta, a, Position::Middle, opts).unwrap();
            let pb = fundamental_pair(&shell, n, pol, 1.0, delta, b, Position::Middle, opts).unwrap();
            let col = |p: &[[Complex64; 2]; 2], k: usize| [p[0][k], p[1][k]];
            // march each column in the direction it grows
            for (k, from, to, y0, want) in [(0, b, a, col(&pb, 0), col(&pa, 0)), (1, a, b, col(&pa, 1), col(&pb, 1))] {
                let got = rk4_layer(&shell, n, pol, delta, y0, from, to, 20_000);
                prop_assert!(rel(got, want) < 1e-8, "n={} {:?} δ={:e} col {}: {}", n, pol, delta, k, rel(got, want));
            }
        }
    }

    /// Classical RK4 for `(u, w)` with `u' = -iωμ w`, `w' = i(L²/(ωμr²) - ωε) u`
    /// (TE) and `p' = i(ωμ - L²/(ωεr²)) q`, `q' = iωε p` (TM), at `ω = 1`.
    #[allow(clippy::too_many_arguments)]
    fn rk4_layer(
        layer: &RadialLayer,
        n: usize,
        pol: Polarization,
        delta: f64,
        y0: [Complex64; 2],
        from: f64,
        to: f64,
        steps: usize,
    ) -> [Complex64; 2] {
        let l2 = (n * (n + 1)) as f64;
        let i = Complex64::i();
        let f = |r: f64, y: [Complex64; 2]| {
            let (eps, mu) = layer.coefficients(r, delta);
            match pol {
                Polarization::TE => [-i * mu * y[1], i * (l2 / (mu * r * r) - eps) * y[0]],
                Polarization::TM => [i * (mu - l2 / (eps * r * r)) * y[1], i * eps * y[0]],
            }
        };
        let h = (to - from) / steps as f64;
        let add = |y: [Complex64; 2], d: [Complex64; 2], t: f64| [y[0] + d[0] * t, y[1] + d[1] * t];
        let mut y = y0;
        for s in 0..steps {
            let r = from + s as f64 * h;
            let k1 = f(r, y);
            let k2 = f(r + h / 2.0, add(y, k1, h / 2.0));
            let k3 = f(r + h / 2.0, add(y, k2, h / 2.0));
            let k4 = f(r + h, add(y, k3, h));
            for j in 0..2 {
                y[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
            }
        }
        y
    }
}
