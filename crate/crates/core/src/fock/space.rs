//! Truncated symmetric Fock space over a momentum grid.
//!
//! A degree-`n` component is stored on sorted multisets of momentum indices,
//! ranked in colexicographic order. The norm counts every ordered tuple:
//! `|u_n|^2 = sum_{p_1..p_n} prod mu(p_i) |u(p)|^2`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::HashMap;

use super::grid::MomentumGrid;
use crate::error::{invalid, Error, Result};

/// Refuse spaces beyond this many complex entries.
pub const MAX_DIM: usize = 40_000_000;

#[derive(Debug, Clone)]
pub struct Sector {
    pub n: usize,
    pub dim: usize,
    /// Sorted momentum indices, `n` per row.
    pub elems: Vec<u16>,
    /// Rank in degree `n - 1` after removing the `m`-th element, `n` per row.
    pub down: Vec<u32>,
    /// Rank in degree `n + 1` after inserting momentum `q`, `K` per row;
    /// empty for the top degree.
    pub up: Vec<u32>,
    /// Number of ordered tuples times `prod mu`.
    pub weight: Vec<f64>,
    pub total_id: Vec<u32>,
    /// Distinct total momenta (reduced labels).
    pub totals: Vec<Vec<i64>>,
    /// Symbol of `-Delta` per total.
    pub lap: Vec<f64>,
    /// Difference multipliers `[dir][total]`.
    pub diff: Vec<Vec<C64>>,
}

impl Sector {
    pub fn row(&self, i: usize) -> &[u16] {
        &self.elems[i * self.n..(i + 1) * self.n]
    }
}

pub struct Binomials {
    table: Vec<Vec<usize>>,
}

impl Binomials {
    pub fn new(max_n: usize, max_k: usize) -> Self {
        let mut table = vec![vec![0usize; max_k + 1]; max_n + 1];
        for a in 0..=max_n {
            table[a][0] = 1;
            for b in 1..=max_k.min(a) {
                table[a][b] = table[a - 1][b - 1] + if b <= a - 1 { table[a - 1][b] } else { 0 };
            }
        }
        Binomials { table }
    }

    pub fn get(&self, a: usize, b: usize) -> usize {
        if b > a {
            0
        } else {
            self.table[a][b]
        }
    }

    /// Colex rank of a sorted multiset.
    pub fn rank(&self, p: &[u16]) -> usize {
        p.iter()
            .enumerate()
            .map(|(i, &v)| self.get(v as usize + i, i + 1))
            .sum()
    }
}

/// Visits every sorted multiset of size `n` over `0..k` in rank order.
pub fn for_each_multiset(n: usize, k: usize, mut f: impl FnMut(&[u16])) {
    if n == 0 {
        f(&[]);
        return;
    }
    if k == 0 {
        return;
    }
    let mut p = vec![0u16; n];
    loop {
        f(&p);
        let mut i = 0;
        while i + 1 < n && p[i] == p[i + 1] {
            i += 1;
        }
        p[i] += 1;
        if p[i] as usize == k {
            return;
        }
        for v in p.iter_mut().take(i) {
            *v = 0;
        }
    }
}

pub struct FockSpace {
    pub grid: MomentumGrid,
    pub n_max: usize,
    pub sectors: Vec<Sector>,
    pub offsets: Vec<usize>,
    pub binom: Binomials,
    /// Kernels of the direction functionals.
    pub kernels: Vec<Vec<C64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

pub fn sector_dim(k: usize, n: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let mut v: u128 = 1;
    for i in 0..n as u128 {
        v = v * (k as u128 + i) / (i + 1);
    }
    v.min(usize::MAX as u128) as usize
}

impl FockSpace {
    pub fn new(grid: MomentumGrid, n_max: usize) -> Result<Self> {
        let k = grid.len();
        if k == 0 {
            return Err(invalid("grid", "no momenta"));
        }
        if k > u16::MAX as usize {
            return Err(invalid("grid", "too many momenta"));
        }
        let total: usize = (0..=n_max).map(|n| sector_dim(k, n)).sum();
        if total > MAX_DIM {
            return Err(Error::Budget(format!(
                "Fock space of dimension {total} exceeds the limit {MAX_DIM}"
            )));
        }
        let binom = Binomials::new(k + n_max + 1, n_max + 2);
        let dirs = grid.directions();
        let mut sectors = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let dim = sector_dim(k, n);
            let mut elems = Vec::with_capacity(dim * n);
            let mut down = Vec::with_capacity(dim * n);
            let mut up = if n < n_max { Vec::with_capacity(dim * k) } else { Vec::new() };
            let mut weight = Vec::with_capacity(dim);
            let mut total_id = Vec::with_capacity(dim);
            let mut totals: Vec<Vec<i64>> = Vec::new();
            let mut ids: HashMap<Vec<i64>, u32> = HashMap::new();
            let fact = factorial(n);
            let mut scratch = vec![0u16; n + 1];
            for_each_multiset(n, k, |p| {
                elems.extend_from_slice(p);
                for m in 0..n {
                    scratch[..m].copy_from_slice(&p[..m]);
                    scratch[m..n - 1].copy_from_slice(&p[m + 1..]);
                    down.push(binom.rank(&scratch[..n - 1]) as u32);
                }
                if n < n_max {
                    for q in 0..k as u16 {
                        let pos = p.partition_point(|&v| v <= q);
                        scratch[..pos].copy_from_slice(&p[..pos]);
                        scratch[pos] = q;
                        scratch[pos + 1..=n].copy_from_slice(&p[pos..]);
                        up.push(binom.rank(&scratch[..=n]) as u32);
                    }
                }
                let mut w = fact;
                let mut run = 1usize;
                for i in 0..n {
                    w *= grid.mu[p[i] as usize];
                    if i > 0 && p[i] == p[i - 1] {
                        run += 1;
                        w /= run as f64;
                    } else {
                        run = 1;
                    }
                }
                weight.push(w);
                let mut tot = vec![0i64; grid.d];
                for &q in p {
                    for (t, v) in tot.iter_mut().zip(&grid.ks[q as usize]) {
                        *t += v;
                    }
                }
                grid.reduce(&mut tot);
                let next = ids.len() as u32;
                let id = *ids.entry(tot.clone()).or_insert_with(|| {
                    totals.push(tot);
                    next
                });
                total_id.push(id);
            });
            debug_assert_eq!(weight.len(), dim);
            let lap = totals.iter().map(|t| grid.laplacian_symbol(t)).collect();
            let diff = (0..dirs)
                .map(|e| totals.iter().map(|t| grid.difference_symbol(e, t)).collect())
                .collect();
            sectors.push(Sector {
                n,
                dim,
                elems,
                down,
                up,
                weight,
                total_id,
                totals,
                lap,
                diff,
            });
        }
        let mut offsets = vec![0];
        for s in &sectors {
            offsets.push(offsets.last().unwrap() + s.dim);
        }
        let kernels = (0..dirs).map(|e| grid.kernel(e)).collect();
        Ok(FockSpace {
            grid,
            n_max,
            sectors,
            offsets,
            binom,
            kernels,
        })
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, n: usize) -> std::ops::Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    pub fn zeros(&self) -> GradedVector {
        GradedVector {
            data: vec![C64::new(0.0, 0.0); self.dim()],
        }
    }

    pub fn vacuum(&self) -> GradedVector {
        let mut v = self.zeros();
        v.data[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn component<'v>(&self, v: &'v GradedVector, n: usize) -> &'v [C64] {
        &v.data[self.range(n)]
    }

    pub fn component_mut<'v>(&self, v: &'v mut GradedVector, n: usize) -> &'v mut [C64] {
        let r = self.range(n);
        &mut v.data[r]
    }

    /// Weights of all coordinates, concatenated over degrees.
    pub fn weights(&self) -> Vec<f64> {
        self.sectors.iter().flat_map(|s| s.weight.iter().copied()).collect()
    }

    pub fn inner(&self, u: &GradedVector, v: &GradedVector) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for s in &self.sectors {
            let r = self.range(s.n);
            for ((a, b), w) in u.data[r.clone()].iter().zip(&v.data[r]).zip(&s.weight) {
                acc += a.conj() * b * *w;
            }
        }
        acc
    }

    pub fn norm2(&self, v: &GradedVector) -> f64 {
        self.inner(v, v).re
    }

    pub fn degree_norm2(&self, v: &GradedVector, n: usize) -> f64 {
        self.component(v, n)
            .iter()
            .zip(&self.sectors[n].weight)
            .map(|(a, w)| a.norm_sqr() * w)
            .sum()
    }

    /// Keeps only degree `n`.
    pub fn project(&self, v: &GradedVector, n: usize) -> GradedVector {
        let mut out = self.zeros();
        let r = self.range(n);
        out.data[r.clone()].copy_from_slice(&v.data[r]);
        out
    }

    /// `J`: multiplies degree `n` by `(-1)^n`.
    pub fn parity(&self, v: &GradedVector) -> GradedVector {
        let mut out = v.clone();
        for n in (1..=self.n_max).step_by(2) {
            for x in self.component_mut(&mut out, n) {
                *x = -*x;
            }
        }
        out
    }

    /// Random vector with independent complex Gaussian coordinates scaled
    /// to unit Fock norm per populated degree.
    pub fn random(&self, degrees: &[usize], seed: u64) -> GradedVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = self.zeros();
        for &n in degrees {
            if n > self.n_max {
                continue;
            }
            let s = &self.sectors[n];
            let r = self.range(n);
            for (x, w) in v.data[r].iter_mut().zip(&s.weight) {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                *x = C64::new(a, b) / (w * s.dim as f64).sqrt();
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedVector {
    pub data: Vec<C64>,
}

impl GradedVector {
    pub fn axpy(&mut self, a: C64, x: &GradedVector) {
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y += a * v;
        }
    }

    pub fn scale(&mut self, a: C64) {
        for y in self.data.iter_mut() {
            *y *= a;
        }
    }

    pub fn add(&self, other: &GradedVector) -> GradedVector {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &GradedVector) -> GradedVector {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_follow_enumeration() {
        let b = Binomials::new(12, 5);
        for n in 0..4 {
            let mut i = 0;
            for_each_multiset(n, 5, |p| {
                assert_eq!(b.rank(p), i);
                i += 1;
            });
            assert_eq!(i, sector_dim(5, n));
        }
    }

    #[test]
    fn weights_count_ordered_tuples() {
        let grid = MomentumGrid::lattice(1, 4, 1.0).unwrap();
        let space = FockSpace::new(grid, 3).unwrap();
        for n in 0..=3 {
            let total: f64 = space.sectors[n].weight.iter().sum();
            let one: f64 = space.grid.mu.iter().sum();
            assert!((total - one.powi(n as i32)).abs() < 1e-12);
        }
    }
}
