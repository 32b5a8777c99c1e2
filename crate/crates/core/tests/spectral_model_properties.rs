//! Quadrature constants and rate-function invariants.

use std::f64::consts::PI;

use proptest::prelude::*;

use selfrepel_core::model::*;
use selfrepel_core::presets::{gaussian_mode, gaussian_mode_normalized, srbp_gauss_d3};
use selfrepel_core::spectral::*;

#[test]
fn green_function_constants() {
    let c0 = lattice_green(&[0, 0, 0], &DEFAULT_LADDER).unwrap();
    let ce = lattice_green(&[1, 0, 0], &DEFAULT_LADDER).unwrap();
    // frozen from the M = 64, 128, 256 ladder; the simple-random-walk Green
    // function at the origin is 1.516386..., divided by 2d = 6
    assert!((c0.value - 0.252731).abs() < 1e-5, "{c0:?}");
    assert!((c0.value - 1.516386059 / 6.0).abs() < 1e-5);
    assert!((c0.value - ce.value - 1.0 / 6.0).abs() < 1e-8, "{}", c0.value - ce.value);
    let a = lattice_green(&[1, 2, 0], &[32, 64]).unwrap();
    let b = lattice_green(&[2, 0, 1], &[32, 64]).unwrap();
    let c = lattice_green(&[-1, 0, -2], &[32, 64]).unwrap();
    assert!((a.value - b.value).abs() < 1e-12);
    assert!((a.value - c.value).abs() < 1e-12);
    assert!(lattice_green(&[0, 0], &DEFAULT_LADDER).is_err());
}

#[test]
fn gamma_kernel_identities() {
    for m in [8, 16, 32, 64] {
        let avg = gamma_kernel_average(3, m).unwrap();
        assert!((avg - 1.0 / 3.0).abs() < 1e-10, "M = {m}: {avg}");
        let sup = gamma_kernel_sup(3, m).unwrap();
        assert!(sup <= 1.0 && sup > 0.9);
    }
    assert!(gamma_kernel_sup(3, 64).unwrap() > gamma_kernel_sup(3, 16).unwrap());
    assert!((gamma_kernel(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    assert_eq!(gamma_kernel(&[0.0; 3]), 0.0);
}

#[test]
fn infrared_integrals() {
    let d3 = infrared_integral(|_| 1.0, 3, &[32, 64, 128]).unwrap();
    assert!(d3.converged, "{d3:?}");
    let d2 = infrared_integral(|_| 1.0, 2, &[64, 128, 256, 512]).unwrap();
    // each doubling adds about the same amount: linear in log M
    let steps: Vec<f64> = d2.ladder.windows(2).map(|w| w[1].1 - w[0].1).collect();
    for w in steps.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.05, "{steps:?}");
    }
    assert!(d2.log_slope > 1.0);
    let exact = infrared_integral(lattice_symbol, 3, &[16, 32]).unwrap();
    for (_, v) in &exact.ladder {
        assert!((v - (2.0 * PI).powi(3)).abs() < 1e-9);
    }
}

#[test]
fn continuum_constants() {
    let v = srbp_gauss_d3();
    let rho2 = rho_squared(&v).unwrap();
    let closed = 2f64.sqrt() * PI.powf(1.5) / 3.0;
    assert!((rho2 - closed).abs() < 1e-10, "{rho2} vs {closed}");
    assert!((rho2 - 2.6244).abs() < 1e-3);
    let vb = variational_bound_continuum(&v, 0).unwrap();
    assert!((vb - (2.0 * PI).powf(1.5) / 3.0).abs() < 1e-10);
    let scaled = Potential::gaussian(2.5, 1.0, 3).unwrap();
    assert!((rho_squared(&scaled).unwrap() - 2.5 * rho2).abs() < 1e-10);
    assert!((variational_bound_continuum(&scaled, 2).unwrap() - 2.5 * vb).abs() < 1e-9);
    assert!(rho_squared(&Potential::gaussian(1.0, 1.0, 2).unwrap()).is_err());
    assert!(variational_bound_continuum(&v, 3).is_err());
}

#[test]
fn bound_evaluators() {
    let z = 1.3;
    let mut prev = 0.0;
    for k in 0..10u32 {
        let b = covariance_bound(k, k / 2, 0.9, z);
        assert!(b > prev);
        prev = b;
    }
    assert!(z_bound(1.0, 1.0, 1.0).is_err());
    let sinh = OddPart::Entire {
        derivatives: vec![1.0; 20],
        truncated: true,
    };
    assert!(matches!(entire_bound(&sinh, 0.9, z), SeriesSum::Divergent));
}

#[test]
fn fourier_transform_recovers_origin_value() {
    // (2 pi)^{-3/2} int Vhat(p) dp = V(0)
    let v = Potential::gaussian(1.7, 0.8, 3).unwrap();
    let (x, w) = gauss_legendre(200, 0.0, 40.0);
    let radial: f64 = x.iter().zip(&w).map(|(r, c)| c * r * r * v.hat_r2(r * r)).sum();
    let back = (2.0 * PI).powf(-1.5) * 4.0 * PI * radial;
    assert!((back - v.eval(&[0.0; 3])).abs() < 1e-6 * 1.7);
}

#[test]
fn rate_function_conditions() {
    let rf = gaussian_mode(1.0, 0.25).unwrap();
    let rep = check_conditions(&rf);
    assert!(rep.ellipticity && rep.convexity && rep.gaussian_domination && rep.r_entire);
    assert!((rep.entire_sum.value().unwrap() - (2.0f64 / 0.9).sqrt()).abs() < 1e-12);
    // configured gamma is not the infimum for this preset
    assert!((rf.w_inf() - 0.25).abs() < 1e-12);
    assert!(!rep.gamma_is_lower_bound);
}

#[test]
fn normalized_mode_attains_gamma() {
    for (gamma, s4) in [(1.0, 0.1), (1.0, 0.25), (10.0, 0.05)] {
        let rf = gaussian_mode_normalized(gamma, s4).unwrap();
        assert!((rf.w_inf() - gamma).abs() < 1e-10, "{}", rf.w_inf());
        let rep = check_conditions(&rf);
        assert!(rep.ellipticity && rep.gamma_is_lower_bound);
    }
    // the bare quartic with s4 = 0.1 is not elliptic
    assert!(!check_conditions(&gaussian_mode(1.0, 0.1).unwrap()).ellipticity);
    assert!(gaussian_mode_normalized(1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn even_odd_decomposition(
        gamma in 0.1f64..5.0,
        s2 in 0.0f64..1.0,
        s4 in 0.01f64..1.0,
        r3 in 0.0f64..0.5,
        u in -5.0f64..5.0,
    ) {
        let rf = RateFunction::new(RateParams {
            gamma,
            s_coeffs: vec![0.0, s2, s4],
            r: OddPart::Entire { derivatives: vec![1.0, r3], truncated: false },
            c: 0.9,
            eps: 0.1,
            c_dom: 10.0,
        }).unwrap();
        let (wp, wm) = (rf.eval(u), rf.eval(-u));
        let tol = 1e-12 * (1.0 + wp.abs() + wm.abs());
        prop_assert!((wp + wm - 2.0 * gamma - 2.0 * rf.s().eval(u)).abs() < tol);
        prop_assert!((wp - wm - 2.0 * rf.r().eval(u)).abs() < tol);
    }

    #[test]
    fn potential_transform_is_nonnegative(p in prop::array::uniform3(-50.0f64..50.0), a in 0.1f64..5.0, w in 0.2f64..3.0) {
        let v = Potential::gaussian(a, w, 3).unwrap();
        prop_assert!(v.hat(&p) >= 0.0);
    }

    #[test]
    fn domination_is_monotone_in_s4(s4 in 0.01f64..2.0, factor in 1.0f64..20.0) {
        let mk = |s: f64| RateFunction::new(RateParams {
            gamma: 1.0,
            s_coeffs: vec![0.0, 0.0, s],
            r: OddPart::Linear,
            c: 0.9,
            eps: 0.1,
            c_dom: 10.0,
        }).unwrap();
        let small = check_conditions(&mk(s4));
        let big = check_conditions(&mk(s4 * factor));
        prop_assert!(big.fitted_c_dom >= small.fitted_c_dom);
        prop_assert!(!(big.gaussian_domination && !small.gaussian_domination));
    }
}
