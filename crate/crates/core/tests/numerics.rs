use bgk_affine::dispersion::{count_zeros, dispersion_curve, lambda_fn, lambda_pv, Contour};
use bgk_affine::limits::lambda_a0;
use bgk_affine::moments::{moments_at, moments_pv, Side};
use bgk_affine::spectrum::{residual_2_4, Continuum, PreparedExpansion, SpectralExpansion};
use bgk_affine::{Execution, GasParams, QuadratureScheme};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

fn scheme_with(a: f64, nodes: usize) -> QuadratureScheme {
    QuadratureScheme::new(GasParams::new(a).unwrap(), nodes).unwrap()
}

#[test]
fn doubling_nodes_changes_integrals_below_plateau() {
    for a in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let (s1, s2) = (scheme_with(a, 200), scheme_with(a, 400));
        for n in 0..=8 {
            let f = |c: f64| c.powi(n);
            let (v1, v2) = (s1.integrate_weighted(f).unwrap(), s2.integrate_weighted(f).unwrap());
            assert!((v1 - v2).abs() <= 1e-9 * v2.abs().max(1e-300), "a={a} n={n}");
        }
        for z in [Complex64::new(0.2, 0.5), Complex64::new(-1.0, 0.01), Complex64::new(3.0, -2.0)] {
            let (l1, l2) = (lambda_fn(&s1, z).unwrap(), lambda_fn(&s2, z).unwrap());
            assert!((l1 - l2).norm() <= 1e-9 * l2.norm(), "a={a} z={z}");
        }
        let x = 0.3 * s1.params().alpha().min(3.0);
        let (p1, p2) = (lambda_pv(&s1, x).unwrap(), lambda_pv(&s2, x).unwrap());
        assert!((p1 - p2).abs() <= 1e-9 * p2.abs(), "a={a}");
    }
}

#[test]
fn pv_of_a_regular_integrand_is_the_ordinary_integral() {
    let s = scheme_with(1.0, 200);
    let p = *s.params();
    let pole = 0.4;
    // f(C) (C - pole) has no pole, so PV int w f / (C - pole) = int w f.
    let g = |c: f64| (c * c + 1.0).sqrt() * (c - pole);
    let pv = s.integrate_pv(g, pole).unwrap();
    let plain = s.integrate_weighted(|c| (c * c + 1.0).sqrt()).unwrap();
    assert!((pv - plain).abs() < 1e-12 * plain.abs());
    assert!(p.in_cut(p.mu_of(pole)));
}

#[test]
fn constant_frequency_against_closed_form_random_points() {
    let s = scheme_with(0.0, 200);
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..50 {
        let z = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(0.01..8.0));
        for w in [z, z.conj()] {
            let general = lambda_fn(&s, w).unwrap();
            let closed = lambda_a0(w);
            assert!((general - closed).norm() < 1e-9 * closed.norm(), "{w}");
        }
    }
}

#[test]
fn five_nested_contours_enclose_no_zeros() {
    for a in [0.5, 1.0, 2.0] {
        let s = scheme_with(a, 200);
        for contour in Contour::nested_family(s.params().alpha(), 5).unwrap() {
            assert_eq!(count_zeros(&s, &contour, Execution::default()).unwrap().zeros, 0, "a={a}");
        }
    }
}

#[test]
fn curve_is_independent_of_execution_mode() {
    let s = scheme_with(1.0, 200);
    let xs: Vec<f64> = (0..101).map(|k| -0.95 + 1.9 * k as f64 / 100.0).collect();
    let seq = dispersion_curve(&s, &xs, Side::Plus, Execution::Sequential).unwrap();
    let par = dispersion_curve(&s, &xs, Side::Plus, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn moments_continuous_in_slope() {
    let z = Complex64::new(0.4, 0.7);
    let base = moments_at(&scheme_with(0.0, 200), z).unwrap();
    let tiny = moments_at(&scheme_with(1e-7, 200), z).unwrap();
    for n in 0..5 {
        assert!((base.t[n] - tiny.t[n]).norm() < 1e-5);
    }
    let pv = moments_pv(&scheme_with(1e-7, 200), 0.4).unwrap();
    let pv0 = moments_pv(&scheme_with(0.0, 200), 0.4).unwrap();
    for n in 0..5 {
        assert!((pv.t[n] - pv0.t[n]).norm() < 1e-5);
    }
}

#[test]
fn expansion_with_pure_continuum_at_constant_frequency() {
    let s = scheme_with(0.0, 200);
    let cont = Continuum::bump(s.params(), 0.1, 0.35, 1.0, 801).unwrap();
    let prepared = PreparedExpansion::new(
        &s,
        SpectralExpansion {
            discrete: [0.0; 4],
            continuum: Some(cont),
        },
        Execution::default(),
    )
    .unwrap();
    for x in [0.3, 1.0] {
        assert!(residual_2_4(&s, &prepared, x, Execution::default()).unwrap() < 1e-5);
    }
}
