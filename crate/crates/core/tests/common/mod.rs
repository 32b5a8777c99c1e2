//! Dense tensor-space oracle: all ordered tuples of momentum indices up to a
//! cap, with explicit symmetrization.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

use selfrepel_core::fock::{FockSpace, GradedVector, MomentumGrid};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub struct Tensors {
    k: usize,
    cap: usize,
    offsets: Vec<usize>,
    mu: Vec<f64>,
}

impl Tensors {
    pub fn new(k: usize, cap: usize, mu: Vec<f64>) -> Self {
        let mut offsets = vec![0];
        for n in 0..=cap {
            offsets.push(offsets[n] + k.pow(n as u32));
        }
        Tensors { k, cap, offsets, mu }
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.cap + 1]
    }

    pub fn tuple(&self, n: usize, mut idx: usize) -> Vec<usize> {
        let mut t = vec![0; n];
        for slot in t.iter_mut() {
            *slot = idx % self.k;
            idx /= self.k;
        }
        t
    }

    pub fn index(&self, t: &[usize]) -> usize {
        let mut idx = 0;
        for &v in t.iter().rev() {
            idx = idx * self.k + v;
        }
        self.offsets[t.len()] + idx
    }

    pub fn weight(&self, t: &[usize]) -> f64 {
        t.iter().map(|&q| self.mu[q]).product()
    }

    pub fn inner(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = ZERO;
        for n in 0..=self.cap {
            for i in 0..self.k.pow(n as u32) {
                let t = self.tuple(n, i);
                let j = self.offsets[n] + i;
                acc += u[j].conj() * v[j] * self.weight(&t);
            }
        }
        acc
    }

    pub fn create(&self, f: &[C64], v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for n in 0..self.cap {
            for i in 0..self.k.pow(n as u32 + 1) {
                let t = self.tuple(n + 1, i);
                let mut acc = ZERO;
                for m in 0..=n {
                    let mut rest = t.clone();
                    rest.remove(m);
                    acc += f[t[m]] * v[self.index(&rest)];
                }
                out[self.offsets[n + 1] + i] = acc / ((n + 1) as f64).sqrt();
            }
        }
        out
    }

    pub fn annihilate(&self, f: &[C64], v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for n in 0..self.cap {
            for i in 0..self.k.pow(n as u32) {
                let t = self.tuple(n, i);
                let mut acc = ZERO;
                for q in 0..self.k {
                    let mut big = vec![q];
                    big.extend_from_slice(&t);
                    acc += f[q].conj() * self.mu[q] * v[self.index(&big)];
                }
                out[self.offsets[n] + i] = acc * ((n + 1) as f64).sqrt();
            }
        }
        out
    }

    pub fn diagonal(&self, v: &[C64], f: impl Fn(&[usize]) -> C64) -> Vec<C64> {
        let mut out = v.to_vec();
        for n in 0..=self.cap {
            for i in 0..self.k.pow(n as u32) {
                let t = self.tuple(n, i);
                out[self.offsets[n] + i] *= f(&t);
            }
        }
        out
    }

    pub fn symmetrize(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for n in 0..=self.cap {
            for i in 0..self.k.pow(n as u32) {
                let t = self.tuple(n, i);
                let perms = permutations(n);
                let mut acc = ZERO;
                for p in &perms {
                    let s: Vec<usize> = p.iter().map(|&j| t[j]).collect();
                    acc += v[self.index(&s)];
                }
                out[self.offsets[n] + i] = acc / perms.len() as f64;
            }
        }
        out
    }

    /// Expands a multiset-stored vector (degrees up to `space.n_max`).
    pub fn from_space(&self, space: &FockSpace, v: &GradedVector) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for n in 0..=space.n_max.min(self.cap) {
            for i in 0..self.k.pow(n as u32) {
                let mut t = self.tuple(n, i);
                t.sort();
                let t16: Vec<u16> = t.iter().map(|&x| x as u16).collect();
                let r = space.binom.rank(&t16);
                out[self.offsets[n] + i] = v.data[space.offsets[n] + r];
            }
        }
        out
    }

    pub fn truncate(&self, v: &mut [C64], n_max: usize) {
        for x in v[self.offsets[n_max + 1]..].iter_mut() {
            *x = ZERO;
        }
    }
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub struct Toy {
    pub space: FockSpace,
    pub tensors: Tensors,
    pub ps: Vec<f64>,
}

/// d = 1, L_f = 4, N_max = 2; tensors up to degree 6 so that quartic
/// multiplications applied to degree <= 2 are exact.
pub fn toy(theta: f64) -> Toy {
    let grid = MomentumGrid::lattice(1, 4, theta).unwrap();
    let ps: Vec<f64> = grid.ps.iter().map(|p| p[0]).collect();
    let mu = grid.mu.clone();
    let space = FockSpace::new(grid, 2).unwrap();
    Toy {
        space,
        tensors: Tensors::new(3, 6, mu),
        ps,
    }
}

impl Toy {
    pub fn kernel(&self, dir: usize) -> Vec<C64> {
        let s = if dir == 0 { 1.0 } else { -1.0 };
        self.ps.iter().map(|&p| C64::new(1.0, 0.0) - C64::from_polar(1.0, s * p)).collect()
    }

    pub fn diff(&self, dir: usize, v: &[C64]) -> Vec<C64> {
        let s = if dir == 0 { 1.0 } else { -1.0 };
        self.tensors.diagonal(v, |t| {
            let tot: f64 = t.iter().map(|&q| self.ps[q]).sum();
            C64::from_polar(1.0, s * tot) - 1.0
        })
    }

    pub fn abs_lap(&self, v: &[C64], power: f64) -> Vec<C64> {
        self.tensors.diagonal(v, |t| {
            let tot: f64 = t.iter().map(|&q| self.ps[q]).sum();
            let l = 2.0 * (1.0 - tot.cos());
            if l < 1e-12 {
                if power < 0.0 {
                    ZERO
                } else {
                    C64::new(l.powf(power), 0.0)
                }
            } else {
                C64::new(l.powf(power), 0.0)
            }
        })
    }

    /// `s(a* + a)` by repeated multiplication with `x = a* + a`.
    pub fn s_mult(&self, dir: usize, s_dense: &[f64], v: &[C64]) -> Vec<C64> {
        let f = self.kernel(dir);
        let mut out = vec![ZERO; v.len()];
        let mut pw = v.to_vec();
        for (m, &c) in s_dense.iter().enumerate() {
            if m > 0 {
                let a = self.tensors.create(&f, &pw);
                let b = self.tensors.annihilate(&f, &pw);
                pw = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            }
            for (o, p) in out.iter_mut().zip(&pw) {
                *o += p * c;
            }
        }
        out
    }

    /// Matrix of an operator in the tensor basis restricted to symmetric
    /// degree <= 2 inputs, checked against the applier on random vectors.
    pub fn max_error(
        &self,
        applier: impl Fn(&GradedVector) -> GradedVector,
        dense: impl Fn(&[C64]) -> Vec<C64>,
    ) -> f64 {
        let mut worst = 0.0f64;
        for seed in 0..5 {
            let v = self.space.random(&[0, 1, 2], 100 + seed);
            let tv = self.tensors.from_space(&self.space, &v);
            let mut want = dense(&tv);
            self.tensors.truncate(&mut want, 2);
            let got = self.tensors.from_space(&self.space, &applier(&v));
            worst = worst.max(max_diff(&want, &got));
        }
        worst
    }

    pub fn check(
        &self,
        name: &str,
        applier: impl Fn(&GradedVector) -> GradedVector,
        dense: impl Fn(&[C64]) -> Vec<C64>,
    ) {
        let err = self.max_error(applier, dense);
        assert!(err < 1e-12, "{name}: dense oracle mismatch {err:e}");
    }
}
