//! Elementary appliers: difference and Laplacian multipliers, creation and
//! annihilation operators.

use num_complex::Complex64 as C64;

use super::space::{for_each_multiset, FockSpace, GradedVector};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

impl FockSpace {
    fn diagonal(&self, v: &GradedVector, f: impl Fn(usize, u32) -> C64) -> GradedVector {
        let mut out = v.clone();
        for s in &self.sectors {
            let r = self.range(s.n);
            for (x, &t) in out.data[r].iter_mut().zip(&s.total_id) {
                *x *= f(s.n, t);
            }
        }
        out
    }

    /// `nabla_e = tau_e - 1`.
    pub fn apply_diff(&self, dir: usize, v: &GradedVector) -> GradedVector {
        self.diagonal(v, |n, t| self.sectors[n].diff[dir][t as usize])
    }

    /// `Delta`, multiplier `-|Delta|(P)`.
    pub fn apply_laplacian(&self, v: &GradedVector) -> GradedVector {
        self.diagonal(v, |n, t| C64::new(-self.sectors[n].lap[t as usize], 0.0))
    }

    /// `|Delta|^power`; for negative powers the kernel of `Delta` is
    /// projected out.
    pub fn apply_abs_laplacian_pow(&self, v: &GradedVector, power: f64) -> GradedVector {
        self.diagonal(v, |n, t| {
            let l = self.sectors[n].lap[t as usize];
            C64::new(abs_pow(l, power), 0.0)
        })
    }

    /// `|Delta|^{-1/2} nabla_e`.
    pub fn apply_halfinv_diff(&self, dir: usize, v: &GradedVector) -> GradedVector {
        self.diagonal(v, |n, t| {
            let s = &self.sectors[n];
            s.diff[dir][t as usize] * abs_pow(s.lap[t as usize], -0.5)
        })
    }

    /// Fock norm of the part of `v` on the kernel of `Delta`.
    pub fn kernel_norm2(&self, v: &GradedVector) -> f64 {
        let mut acc = 0.0;
        for s in &self.sectors {
            let r = self.range(s.n);
            for ((x, &t), w) in v.data[r].iter().zip(&s.total_id).zip(&s.weight) {
                if s.lap[t as usize] <= KERNEL_TOL {
                    acc += w * x.norm_sqr();
                }
            }
        }
        acc
    }

    /// Adds `a*(kern)` of the degree-`n` block `src` into the degree
    /// `n + 1` block `out`.
    pub fn create_block(&self, kern: &[C64], src: &[C64], n: usize, out: &mut [C64]) {
        let t = &self.sectors[n + 1];
        let c = 1.0 / ((n + 1) as f64).sqrt();
        let m = n + 1;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &t.elems[i * m..(i + 1) * m];
            let dn = &t.down[i * m..(i + 1) * m];
            let mut acc = ZERO;
            for (&q, &j) in row.iter().zip(dn) {
                acc += kern[q as usize] * src[j as usize];
            }
            *o += acc * c;
        }
    }

    /// Adds `a(kern)` of the degree-`n + 1` block `src` into the degree-`n`
    /// block `out`.
    pub fn annihilate_block(&self, kern: &[C64], src: &[C64], n: usize, out: &mut [C64]) {
        let s = &self.sectors[n];
        let k = self.grid.len();
        let ck: Vec<C64> = kern
            .iter()
            .zip(&self.grid.mu)
            .map(|(g, m)| g.conj() * *m)
            .collect();
        let c = ((n + 1) as f64).sqrt();
        for (i, o) in out.iter_mut().enumerate() {
            let up = &s.up[i * k..(i + 1) * k];
            let mut acc = ZERO;
            for (g, &j) in ck.iter().zip(up) {
                acc += g * src[j as usize];
            }
            *o += acc * c;
        }
    }

    /// `a*(kern) v`, truncated at the degree cap.
    pub fn create_with(&self, kern: &[C64], v: &GradedVector) -> GradedVector {
        let mut out = self.zeros();
        for n in 0..self.n_max {
            let r = self.range(n + 1);
            self.create_block(kern, self.component(v, n), n, &mut out.data[r]);
        }
        out
    }

    /// `a(kern) v`.
    pub fn annihilate_with(&self, kern: &[C64], v: &GradedVector) -> GradedVector {
        let mut out = self.zeros();
        for n in 0..self.n_max {
            let r = self.range(n);
            let src = self.component(v, n + 1);
            self.annihilate_block(kern, src, n, &mut out.data[r]);
        }
        out
    }

    pub fn create(&self, dir: usize, v: &GradedVector) -> GradedVector {
        self.create_with(&self.kernels[dir], v)
    }

    pub fn annihilate(&self, dir: usize, v: &GradedVector) -> GradedVector {
        self.annihilate_with(&self.kernels[dir], v)
    }

    /// Fock norm squared of `sum_t a*(kern_t) src_t` in degree `n_max + 1`,
    /// where each `src_t` is a top-degree block. Computed by streaming over
    /// the output multisets, which are never stored.
    pub fn create_overflow_norm2(&self, terms: &[(&[C64], &[C64])]) -> f64 {
        let n = self.n_max;
        let m = n + 1;
        let c = 1.0 / (m as f64).sqrt();
        let mu = &self.grid.mu;
        let mut scratch = vec![0u16; n];
        let mut total = 0.0;
        let fact: f64 = (1..=m).map(|v| v as f64).product();
        let mut ranks = vec![0usize; m];
        for_each_multiset(m, self.grid.len(), |p| {
            for (r, slot) in ranks.iter_mut().enumerate() {
                scratch[..r].copy_from_slice(&p[..r]);
                scratch[r..].copy_from_slice(&p[r + 1..]);
                *slot = self.binom.rank(&scratch);
            }
            let mut acc = ZERO;
            for (kern, src) in terms {
                for (&q, &j) in p.iter().zip(&ranks) {
                    acc += kern[q as usize] * src[j];
                }
            }
            if acc == ZERO {
                return;
            }
            let mut w = fact;
            let mut run = 1usize;
            for i in 0..m {
                w *= mu[p[i] as usize];
                if i > 0 && p[i] == p[i - 1] {
                    run += 1;
                    w /= run as f64;
                } else {
                    run = 1;
                }
            }
            total += w * (acc * c).norm_sqr();
        });
        total
    }
}

/// Symbols at or below this size count as the kernel of `Delta`.
pub const KERNEL_TOL: f64 = 1e-12;

fn abs_pow(l: f64, power: f64) -> f64 {
    if power < 0.0 && l <= KERNEL_TOL {
        0.0
    } else if power == 0.0 {
        1.0
    } else {
        l.powf(power)
    }
}
