//! Independent checks of the Fock-space appliers: a dense tensor-space
//! construction on a toy grid and a polynomial (Isserlis) evaluation of the
//! generator on a three-site torus.

use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::PI;

use selfrepel_core::fock::{FockSpace, GradedVector, Generator, MomentumGrid};

mod common;

use common::{max_diff, toy, ZERO};

#[test]
fn dense_oracle_elementary_appliers() {
    let t = toy(1.0);
    let sp = &t.space;
    for dir in 0..2 {
        let f = t.kernel(dir);
        t.check("create", |v| sp.create(dir, v), |x| t.tensors.create(&f, x));
        t.check("annihilate", |v| sp.annihilate(dir, v), |x| t.tensors.annihilate(&f, x));
        t.check("diff", |v| sp.apply_diff(dir, v), |x| t.diff(dir, x));
        t.check("halfinv_diff", |v| sp.apply_halfinv_diff(dir, v), |x| t.abs_lap(&t.diff(dir, x), -0.5));
    }
    t.check("laplacian", |v| sp.apply_laplacian(v), |x| {
        t.abs_lap(x, 1.0).iter().map(|z| -z).collect()
    });
    t.check("abs_lap^-1/2", |v| sp.apply_abs_laplacian_pow(v, -0.5), |x| t.abs_lap(x, -0.5));
}

#[test]
fn dense_oracle_generator_blocks() {
    let t = toy(0.5);
    let sp = &t.space;
    let s_dense = [0.3, 0.0, 0.7, 0.0, 0.25];
    let gamma = 1.3;
    let g = Generator::from_dense(sp, gamma, &s_dense).unwrap();
    for dir in 0..2 {
        t.check("s_mult", |v| g.apply_s_mult(dir, v), |x| t.s_mult(dir, &s_dense, x));
    }
    let s1 = |x: &[C64]| -> Vec<C64> {
        let mut out = vec![ZERO; x.len()];
        for e in 0..2 {
            let y = t.diff(e ^ 1, &t.s_mult(e, &s_dense, &t.diff(e, x)));
            for (o, v) in out.iter_mut().zip(&y) {
                *o += v * 0.5;
            }
        }
        out
    };
    t.check("s1", |v| g.apply_s1(v), s1);
    let a = |x: &[C64]| -> Vec<C64> {
        let mut out = vec![ZERO; x.len()];
        for e in 0..2 {
            let f = t.kernel(e);
            let up = t.tensors.create(&f, &t.diff(e, x));
            let down = t.diff(e ^ 1, &t.tensors.annihilate(&f, x));
            for ((o, u), d) in out.iter_mut().zip(&up).zip(&down) {
                *o += u - d;
            }
        }
        out
    };
    t.check("a", |v| g.apply_a(v), a);
    t.check("g", |v| g.apply_g(v), |x| {
        let sv = s1(x);
        let dv = t.abs_lap(x, 1.0);
        let av = a(x);
        av.iter()
            .zip(&sv)
            .zip(&dv)
            .map(|((a, s), d)| a - s - d * gamma)
            .collect()
    });
}

#[test]
fn symmetrization_projector() {
    let t = toy(1.0);
    let mut v: Vec<C64> = (0..t.tensors.dim())
        .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
        .collect();
    t.tensors.truncate(&mut v, 4);
    let p = t.tensors.symmetrize(&v);
    assert!(max_diff(&p, &t.tensors.symmetrize(&p)) < 1e-14);
    for dir in 0..2 {
        let a = t.diff(dir, &p);
        let b = t.tensors.symmetrize(&t.diff(dir, &v));
        assert!(max_diff(&a, &b) < 1e-13);
    }
    let a = t.abs_lap(&p, -0.5);
    let b = t.tensors.symmetrize(&t.abs_lap(&v, -0.5));
    assert!(max_diff(&a, &b) < 1e-13);
    // the norm of a symmetric tensor is what the multiset weights report
    let sv = t.space.random(&[0, 1, 2], 9);
    let tv = t.tensors.from_space(&t.space, &sv);
    let n1 = t.tensors.inner(&tv, &tv).re;
    let n2 = t.space.norm2(&sv);
    assert!((n1 - n2).abs() < 1e-12 * n1);
}

// ---------------------------------------------------------------------------
// Polynomial oracle on the three-site ring.

type Mono = [u8; 3];

#[derive(Clone, Debug, Default)]
struct Poly(HashMap<Mono, C64>);

impl Poly {
    fn constant(c: C64) -> Self {
        let mut p = Poly::default();
        p.0.insert([0; 3], c);
        p
    }

    fn var(x: usize) -> Self {
        let mut m = [0; 3];
        m[x] = 1;
        let mut p = Poly::default();
        p.0.insert(m, C64::new(1.0, 0.0));
        p
    }

    fn add(&self, o: &Poly, c: C64) -> Poly {
        let mut out = self.clone();
        for (m, v) in &o.0 {
            *out.0.entry(*m).or_insert(ZERO) += v * c;
        }
        out
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::default();
        for (a, u) in &self.0 {
            for (b, v) in &o.0 {
                let m = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                *out.0.entry(m).or_insert(ZERO) += u * v;
            }
        }
        out
    }

    /// `omega(x) -> omega(x + e)`.
    fn shift(&self, e: i64) -> Poly {
        let mut out = Poly::default();
        for (m, v) in &self.0 {
            let mut n = [0; 3];
            for x in 0..3 {
                n[((x as i64 + e).rem_euclid(3)) as usize] = m[x];
            }
            *out.0.entry(n).or_insert(ZERO) += v;
        }
        out
    }

    fn d0(&self) -> Poly {
        let mut out = Poly::default();
        for (m, v) in &self.0 {
            if m[0] > 0 {
                let mut n = *m;
                n[0] -= 1;
                *out.0.entry(n).or_insert(ZERO) += v * m[0] as f64;
            }
        }
        out
    }

    fn conj(&self) -> Poly {
        Poly(self.0.iter().map(|(m, v)| (*m, v.conj())).collect())
    }
}

struct Gauss {
    cov: [[f64; 3]; 3],
    memo: std::cell::RefCell<HashMap<Mono, f64>>,
}

impl Gauss {
    fn new(theta: f64) -> Self {
        let mut cov = [[0.0; 3]; 3];
        for x in 0..3 {
            for y in 0..3 {
                let mut c = 0.0;
                for k in 1..3 {
                    let p = 2.0 * PI * k as f64 / 3.0;
                    c += (p * (y as f64 - x as f64)).cos() / (2.0 * (1.0 - p.cos()));
                }
                cov[x][y] = theta * c / 3.0;
            }
        }
        Gauss {
            cov,
            memo: Default::default(),
        }
    }

    /// Isserlis' theorem through Gaussian integration by parts.
    fn moment(&self, m: Mono) -> f64 {
        let deg: u8 = m.iter().sum();
        if deg == 0 {
            return 1.0;
        }
        if deg % 2 == 1 {
            return 0.0;
        }
        if let Some(v) = self.memo.borrow().get(&m) {
            return *v;
        }
        let x = (0..3).find(|&i| m[i] > 0).unwrap();
        let mut rest = m;
        rest[x] -= 1;
        let mut acc = 0.0;
        for y in 0..3 {
            if rest[y] > 0 {
                let mut r2 = rest;
                r2[y] -= 1;
                acc += rest[y] as f64 * self.cov[x][y] * self.moment(r2);
            }
        }
        self.memo.borrow_mut().insert(m, acc);
        acc
    }

    fn expect(&self, p: &Poly) -> C64 {
        p.0.iter().map(|(m, v)| v * self.moment(*m)).sum()
    }

    fn wick(&self, sites: &[usize]) -> Poly {
        if sites.is_empty() {
            return Poly::constant(C64::new(1.0, 0.0));
        }
        let x = sites[0];
        let rest = &sites[1..];
        let mut out = Poly::var(x).mul(&self.wick(rest));
        for j in 0..rest.len() {
            let mut r2 = rest.to_vec();
            r2.remove(j);
            out = out.add(&self.wick(&r2), C64::new(-self.cov[x][rest[j]], 0.0));
        }
        out
    }
}

/// The polynomial represented by a graded vector on the d = 1, L_f = 3 grid.
fn to_poly(space: &FockSpace, gauss: &Gauss, v: &GradedVector) -> Poly {
    let ps: Vec<f64> = space.grid.ps.iter().map(|p| p[0]).collect();
    let k = ps.len();
    let mut out = Poly::default();
    for n in 0..=space.n_max {
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        for xi in 0..3usize.pow(n as u32) {
            let sites: Vec<usize> = (0..n).map(|i| (xi / 3usize.pow(i as u32)) % 3).collect();
            let mut c = ZERO;
            for ti in 0..k.pow(n as u32) {
                let mut t: Vec<usize> = (0..n).map(|i| (ti / k.pow(i as u32)) % k).collect();
                let phase: f64 = t.iter().zip(&sites).map(|(&q, &x)| ps[q] * x as f64).sum();
                t.sort();
                let t16: Vec<u16> = t.iter().map(|&q| q as u16).collect();
                let val = v.data[space.offsets[n] + space.binom.rank(&t16)];
                c += val * C64::from_polar(1.0, -phase);
            }
            c /= 3f64.powi(n as i32) * fact.sqrt();
            if c.norm() > 0.0 {
                out = out.add(&gauss.wick(&sites), c);
            }
        }
    }
    out
}

fn poly_generator(p: &Poly, gamma: f64, s_dense: &[f64]) -> Poly {
    let mut out = p.d0();
    for e in [1i64, -1] {
        let delta = Poly::var(0).add(&Poly::var(e.rem_euclid(3) as usize), C64::new(-1.0, 0.0));
        let mut w = Poly::constant(C64::new(gamma, 0.0)).add(&delta, C64::new(1.0, 0.0));
        let mut pw = Poly::constant(C64::new(1.0, 0.0));
        for (m, &c) in s_dense.iter().enumerate() {
            if m > 0 {
                pw = pw.mul(&delta);
            }
            if c != 0.0 {
                w = w.add(&pw, C64::new(c, 0.0));
            }
        }
        let jump = p.shift(e).add(p, C64::new(-1.0, 0.0));
        out = out.add(&w.mul(&jump), C64::new(1.0, 0.0));
    }
    out
}

#[test]
fn polynomial_oracle_inner_product_and_generator() {
    let theta = 0.5;
    let grid = MomentumGrid::lattice(1, 3, theta).unwrap();
    let space = FockSpace::new(grid, 6).unwrap();
    let gauss = Gauss::new(theta);
    let s_dense = [0.2, 0.0, 0.3, 0.0, 0.25];
    let gamma = 0.7;
    let g = Generator::from_dense(&space, gamma, &s_dense).unwrap();
    for seed in 0..4 {
        let u = space.random(&[0, 1, 2, 3, 4, 5, 6], 10 + seed);
        let v = space.random(&[0, 1, 2], 20 + seed);
        let pu = to_poly(&space, &gauss, &u);
        let pv = to_poly(&space, &gauss, &v);
        let fock = space.inner(&u, &v);
        let poly = gauss.expect(&pu.conj().mul(&pv));
        assert!((fock - poly).norm() < 1e-10 * (1.0 + fock.norm()), "{fock} vs {poly}");

        let gp = poly_generator(&pv, gamma, &s_dense);
        let want = gauss.expect(&pu.conj().mul(&gp));
        for (name, gv) in [("literal", g.apply_g_literal(&v)), ("assembled", g.apply_g(&v))] {
            let got = space.inner(&u, &gv);
            assert!(
                (got - want).norm() < 1e-9 * (1.0 + want.norm()),
                "{name}: {got} vs {want}"
            );
        }
        // stationarity of the Gaussian measure with theta = 1/2
        assert!(gauss.expect(&gp).norm() < 1e-10);
    }
}

#[test]
fn polynomial_oracle_rejects_other_covariances() {
    // with theta = 1 the Gaussian measure is not invariant
    let theta = 1.0;
    let gauss = Gauss::new(theta);
    let p = Poly::var(0).add(&Poly::var(1), C64::new(-1.0, 0.0));
    let gp = poly_generator(&p, 1.0, &[0.0]);
    assert!(gauss.expect(&gp).norm() > 1e-3);
    let gauss = Gauss::new(0.5);
    assert!(gauss.expect(&poly_generator(&p, 1.0, &[0.0])).norm() < 1e-12);
}
