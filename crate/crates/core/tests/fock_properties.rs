//! Structural identities of the Fock-space operators on the d = 3 grid.

use num_complex::Complex64 as C64;

use selfrepel_core::fock::analysis::norm_growth_scan;
use selfrepel_core::fock::{FockSpace, GradedVector, Generator, MomentumGrid};

fn space(theta: f64, n_max: usize) -> FockSpace {
    FockSpace::new(MomentumGrid::lattice(3, 4, theta).unwrap(), n_max).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}

fn all_degrees(sp: &FockSpace) -> Vec<usize> {
    (0..=sp.n_max).collect()
}

#[test]
fn creation_and_annihilation_are_adjoint() {
    let sp = space(1.0, 3);
    let deg = all_degrees(&sp);
    for k in 0..20u64 {
        let u = sp.random(&deg, 2 * k);
        let v = sp.random(&deg, 2 * k + 1);
        let e = (k % 6) as usize;
        let lhs = sp.inner(&u, &sp.annihilate(e, &v));
        let rhs = sp.inner(&sp.create(e, &u), &v);
        assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
        // nabla_e^* = nabla_{-e}
        let lhs = sp.inner(&u, &sp.apply_diff(e, &v));
        let rhs = sp.inner(&sp.apply_diff(e ^ 1, &u), &v);
        assert!(rel(lhs, rhs) < 1e-10);
    }
}

#[test]
fn symmetric_and_skew_parts() {
    let sp = space(0.5, 3);
    let g = Generator::new(&sp, 1.0, &[0.0, 0.0, 0.25]).unwrap();
    let deg = all_degrees(&sp);
    for k in 0..4u64 {
        let u = sp.random(&deg, 100 + k);
        let v = sp.random(&deg, 200 + k);
        let su = sp.inner(&u, &g.apply_s(&v));
        let sv = sp.inner(&g.apply_s(&u), &v);
        assert!(rel(su, sv) < 1e-10, "S not self-adjoint: {su} vs {sv}");
        let au = sp.inner(&u, &g.apply_a(&v));
        let av = sp.inner(&g.apply_a(&u), &v);
        assert!(rel(au, -av) < 1e-10, "A not skew: {au} vs {av}");
        // S >= 0
        assert!(sp.inner(&u, &g.apply_s(&u)).re >= -1e-12);
        // G* is the adjoint of G
        let gu = sp.inner(&u, &g.apply_g(&v));
        let gs = sp.inner(&g.apply_g_adjoint(&u), &v);
        assert!(rel(gu, gs) < 1e-10);
    }
}

#[test]
fn literal_and_assembled_generators_agree() {
    let sp = space(0.5, 3);
    let g = Generator::new(&sp, 1.3, &[0.1, 0.2, 0.25]).unwrap();
    for k in 0..3u64 {
        let v = sp.random(&all_degrees(&sp), 300 + k);
        let a = g.apply_g(&v);
        let b = g.apply_g_literal(&v);
        let err = a.sub(&b).max_abs() / a.max_abs();
        assert!(err < 1e-11, "{err:e}");
    }
}

#[test]
fn yaglom_parity() {
    let sp = space(0.5, 3);
    let g = Generator::new(&sp, 1.0, &[0.0, 0.3, 0.25]).unwrap();
    let v = sp.random(&all_degrees(&sp), 7);
    let jsj = sp.parity(&g.apply_s(&sp.parity(&v)));
    assert!(jsj.sub(&g.apply_s(&v)).max_abs() < 1e-10 * g.apply_s(&v).max_abs());
    let jaj = sp.parity(&g.apply_a(&sp.parity(&v)));
    assert!(jaj.add(&g.apply_a(&v)).max_abs() < 1e-10 * g.apply_a(&v).max_abs());
}

#[test]
fn vacuum_is_invariant() {
    let sp = space(0.5, 3);
    let g = Generator::new(&sp, 1.0, &[0.0, 0.0, 0.25]).unwrap();
    let vac = sp.vacuum();
    assert!(g.apply_g(&vac).max_abs() < 1e-14);
    assert!(g.apply_g_adjoint(&vac).max_abs() < 1e-14);
    assert!(g.apply_g_literal(&vac).max_abs() < 1e-14);
    assert_eq!(sp.annihilate(0, &vac).max_abs(), 0.0);
}

#[test]
fn zero_s_has_no_s1() {
    let sp = space(0.5, 3);
    let g = Generator::new(&sp, 1.0, &[0.0]).unwrap();
    let v = sp.random(&all_degrees(&sp), 1);
    assert_eq!(g.apply_s1(&v).max_abs(), 0.0);
    let s = g.apply_s(&v);
    let d = g.apply_d(&v);
    assert!(s.sub(&d).max_abs() == 0.0);
}

#[test]
fn odd_s_is_rejected() {
    let sp = space(0.5, 2);
    assert!(Generator::from_dense(&sp, 1.0, &[0.0, 1.0]).is_err());
    let cont = MomentumGrid::continuum(selfrepel_core::presets::srbp_gauss_d3(), 8.0, 1).unwrap();
    let csp = FockSpace::new(cont, 1).unwrap();
    assert!(Generator::new(&csp, 1.0, &[0.0]).is_err());
}

#[test]
fn compensators_match_field_expressions() {
    let sp = space(0.5, 4);
    let g = Generator::new(&sp, 1.0, &[0.0, 0.0, 0.25]).unwrap();
    let vac = sp.vacuum();
    // phi~ = (omega(0) - omega(e)) - (omega(0) - omega(-e))
    let x = |e: usize| sp.create(e, &vac).add(&sp.annihilate(e, &vac));
    let want = x(0).sub(&x(1));
    assert!(g.phi_tilde(0).sub(&want).max_abs() < 1e-14);
    // phi- lives in degrees 2 and 4 only
    let bar = g.phi_bar(0);
    for n in [0, 1, 3] {
        assert!(sp.degree_norm2(&bar, n) < 1e-24);
    }
    assert!(sp.degree_norm2(&bar, 2) > 0.0 && sp.degree_norm2(&bar, 4) > 0.0);
}

#[test]
fn halving_s4_halves_even_blocks() {
    let sp = space(1.0, 3);
    let g1 = Generator::new(&sp, 1.0, &[0.0, 0.0, 0.25]).unwrap();
    let g2 = Generator::new(&sp, 1.0, &[0.0, 0.0, 0.125]).unwrap();
    let t1 = norm_growth_scan(&sp, Some(&g1), &[1, 2], 1.0, 5).unwrap();
    let t2 = norm_growth_scan(&sp, Some(&g2), &[1, 2], 1.0, 5).unwrap();
    let mut checked = 0;
    for (a, b) in t1.rows.iter().zip(&t2.rows) {
        if a.block.starts_with("s1") {
            let ratio = b.estimate.value / a.estimate.value;
            assert!((ratio - 0.5).abs() < 0.025, "{} {}: {ratio}", a.block, a.n);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn graded_vector_arithmetic() {
    let sp = space(1.0, 2);
    let u = sp.random(&[0, 1, 2], 3);
    let mut v = u.clone();
    v.scale(C64::new(2.0, 0.0));
    assert!(v.sub(&u).sub(&u).max_abs() == 0.0);
    let p = sp.project(&u, 1);
    assert!((sp.norm2(&p) - sp.degree_norm2(&u, 1)).abs() < 1e-14);
    let zero = GradedVector {
        data: vec![C64::new(0.0, 0.0); sp.dim()],
    };
    assert_eq!(sp.norm2(&zero), 0.0);
}
