//! Generator of the environment process in the Gaussian case `r(u) = u`,
//! assembled from the elementary appliers.
//!
//! With `M_e` the multiplication by `s(omega(0) - omega(e))`:
//!
//! * `S = gamma |Delta| + S_1`, `S_1 = 1/2 sum_e nabla_{-e} M_e nabla_e`
//! * `A = A_+ + A_-`, `A_+ = sum_e a*_e nabla_e`, `A_- = -sum_e nabla_{-e} a_e`
//! * `G = -S + A`
//!
//! The same operator is also available in its literal form
//! `G = D + sum_e w(a*_e + a_e) nabla_e` with `D = theta^{-1} sum_e a_e` the
//! derivative in the walker's own site; the two agree only on the invariant
//! covariance `theta = 1/2`.

use num_complex::Complex64 as C64;

use super::space::{FockSpace, GradedVector};
use crate::error::{invalid, Error, Result};

/// `(2k - 1)!!`, with `(-1)!! = 1`.
fn double_factorial_odd(k: usize) -> f64 {
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients `c[i][j]` with `p(a* + a) = sum_{i,j} c[i][j] a*^i a^j`
/// when `[a, a*] = kappa`. Uses
/// `x^m = sum_j C(m, 2j) (2j-1)!! kappa^j :x^{m-2j}:` and
/// `:x^r: = sum_i C(r, i) a*^i a^{r-i}`.
pub fn normal_order(dense: &[f64], kappa: f64) -> Vec<Vec<f64>> {
    let deg = dense.len().saturating_sub(1);
    let mut c = vec![vec![0.0; deg + 1]; deg + 1];
    for (m, &sm) in dense.iter().enumerate() {
        if sm == 0.0 {
            continue;
        }
        for j in 0..=m / 2 {
            let r = m - 2 * j;
            let wick = sm * binomial(m, 2 * j) * double_factorial_odd(j) * kappa.powi(j as i32);
            for i in 0..=r {
                c[i][r - i] += wick * binomial(r, i);
            }
        }
    }
    c
}

pub struct Generator<'a> {
    pub space: &'a FockSpace,
    pub gamma: f64,
    /// Dense coefficients of the even part `s`.
    pub s_dense: Vec<f64>,
    pub theta: f64,
    pub kappa: Vec<f64>,
    s_normal: Vec<Vec<Vec<f64>>>,
    /// Normal-ordered form of `s(x) + x`.
    w_normal: Vec<Vec<Vec<f64>>>,
}

impl<'a> Generator<'a> {
    /// `s` from its even coefficients `(s_0, s_2, s_4, ...)`.
    pub fn new(space: &'a FockSpace, gamma: f64, s_even: &[f64]) -> Result<Self> {
        let mut dense = vec![0.0; 2 * s_even.len().max(1) - 1];
        for (k, &v) in s_even.iter().enumerate() {
            dense[2 * k] = v;
        }
        Self::from_dense(space, gamma, &dense)
    }

    pub fn from_dense(space: &'a FockSpace, gamma: f64, dense: &[f64]) -> Result<Self> {
        let theta = space
            .grid
            .theta()
            .ok_or_else(|| Error::Unsupported("generator assembly needs a lattice grid".into()))?;
        if !(gamma > 0.0) {
            return Err(invalid("gamma", "must be positive"));
        }
        if dense.iter().skip(1).step_by(2).any(|&v| v != 0.0) {
            return Err(Error::Parity("s must be even".into()));
        }
        let mut s_dense = dense.to_vec();
        while s_dense.len() > 1 && *s_dense.last().unwrap() == 0.0 {
            s_dense.pop();
        }
        let mut w_dense = s_dense.clone();
        if w_dense.len() < 2 {
            w_dense.resize(2, 0.0);
        }
        w_dense[1] += 1.0;
        let dirs = space.grid.directions();
        let kappa: Vec<f64> = (0..dirs).map(|e| space.grid.norm2(&space.kernels[e])).collect();
        let s_normal = kappa.iter().map(|&k| normal_order(&s_dense, k)).collect();
        let w_normal = kappa.iter().map(|&k| normal_order(&w_dense, k)).collect();
        Ok(Generator {
            space,
            gamma,
            s_dense,
            theta,
            kappa,
            s_normal,
            w_normal,
        })
    }

    pub fn directions(&self) -> usize {
        self.space.grid.directions()
    }

    fn poly_of_field(&self, coef: &[Vec<f64>], dir: usize, v: &GradedVector) -> GradedVector {
        let sp = self.space;
        let deg = coef.len() - 1;
        let mut powers = vec![v.clone()];
        for _ in 0..deg {
            let next = sp.annihilate(dir, powers.last().unwrap());
            powers.push(next);
        }
        let mut acc = sp.zeros();
        for i in (0..=deg).rev() {
            if i < deg {
                acc = sp.create(dir, &acc);
            }
            for (j, b) in powers.iter().enumerate() {
                let c = coef[i].get(j).copied().unwrap_or(0.0);
                if c != 0.0 {
                    acc.axpy(C64::new(c, 0.0), b);
                }
            }
        }
        acc
    }

    /// `M_e = s(a*_e + a_e)` in normal-ordered form.
    pub fn apply_s_mult(&self, dir: usize, v: &GradedVector) -> GradedVector {
        self.poly_of_field(&self.s_normal[dir], dir, v)
    }

    pub fn apply_s1(&self, v: &GradedVector) -> GradedVector {
        let sp = self.space;
        let mut out = sp.zeros();
        for e in 0..self.directions() {
            let w = sp.apply_diff(e, v);
            let m = self.apply_s_mult(e, &w);
            out.axpy(C64::new(0.5, 0.0), &sp.apply_diff(e ^ 1, &m));
        }
        out
    }

    /// `gamma |Delta|`, the diagonal part of `S`.
    pub fn apply_d(&self, v: &GradedVector) -> GradedVector {
        let mut out = self.space.apply_abs_laplacian_pow(v, 1.0);
        out.scale(C64::new(self.gamma, 0.0));
        out
    }

    pub fn apply_s(&self, v: &GradedVector) -> GradedVector {
        self.apply_d(v).add(&self.apply_s1(v))
    }

    pub fn apply_a_plus(&self, v: &GradedVector) -> GradedVector {
        let sp = self.space;
        let mut out = sp.zeros();
        for e in 0..self.directions() {
            out = out.add(&sp.create(e, &sp.apply_diff(e, v)));
        }
        out
    }

    pub fn apply_a_minus(&self, v: &GradedVector) -> GradedVector {
        let sp = self.space;
        let mut out = sp.zeros();
        for e in 0..self.directions() {
            out = out.sub(&sp.apply_diff(e ^ 1, &sp.annihilate(e, v)));
        }
        out
    }

    pub fn apply_a(&self, v: &GradedVector) -> GradedVector {
        self.apply_a_plus(v).add(&self.apply_a_minus(v))
    }

    /// `G = -S + A`.
    pub fn apply_g(&self, v: &GradedVector) -> GradedVector {
        self.apply_a(v).sub(&self.apply_s(v))
    }

    /// `G* = -S - A`.
    pub fn apply_g_adjoint(&self, v: &GradedVector) -> GradedVector {
        let mut out = self.apply_s(v).add(&self.apply_a(v));
        out.scale(C64::new(-1.0, 0.0));
        out
    }

    /// Literal form `theta^{-1} sum_e a_e + sum_e (gamma + s(x_e) + x_e) nabla_e`
    /// with `x_e = a*_e + a_e`.
    pub fn apply_g_literal(&self, v: &GradedVector) -> GradedVector {
        let sp = self.space;
        let dirs = self.directions();
        let mut total_kernel = vec![C64::new(0.0, 0.0); sp.grid.len()];
        for k in &sp.kernels {
            for (t, g) in total_kernel.iter_mut().zip(k) {
                *t += g;
            }
        }
        let mut out = sp.annihilate_with(&total_kernel, v);
        out.scale(C64::new(1.0 / self.theta, 0.0));
        for e in 0..dirs {
            let w = sp.apply_diff(e, v);
            out.axpy(C64::new(self.gamma, 0.0), &w);
            out = out.add(&self.poly_of_field(&self.w_normal[e], e, &w));
        }
        out
    }

    /// `phi~_l`: the compensator of `r(u) = u`, `omega(-e_l) - omega(e_l)`,
    /// with `u(p) = -2i sin p_l` in degree 1.
    pub fn phi_tilde(&self, axis: usize) -> GradedVector {
        let sp = self.space;
        let mut v = sp.zeros();
        if sp.n_max == 0 {
            return v;
        }
        let r = sp.range(1);
        for (x, p) in v.data[r].iter_mut().zip(&sp.grid.ps) {
            *x = C64::new(0.0, -2.0 * p[axis].sin());
        }
        v
    }

    /// `phi-_l = s(omega(0) - omega(e_l)) - s(omega(0) - omega(-e_l))`,
    /// supported in even degrees `2..=deg s`.
    pub fn phi_bar(&self, axis: usize) -> GradedVector {
        let vac = self.space.vacuum();
        self.apply_s_mult(2 * axis, &vac)
            .sub(&self.apply_s_mult(2 * axis + 1, &vac))
    }

    /// Norm squared of the creation flux `A_+` out of the top degree.
    pub fn truncation_flux2(&self, v: &GradedVector) -> f64 {
        let sp = self.space;
        let top = sp.n_max;
        let blocks: Vec<Vec<C64>> = (0..self.directions())
            .map(|e| sp.component(&sp.apply_diff(e, &sp.project(v, top)), top).to_vec())
            .collect();
        let terms: Vec<(&[C64], &[C64])> = blocks
            .iter()
            .enumerate()
            .map(|(e, b)| (sp.kernels[e].as_slice(), b.as_slice()))
            .collect();
        sp.create_overflow_norm2(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_square() {
        // (a* + a)^2 = a*a* + 2 a*a + aa + kappa
        let c = normal_order(&[0.0, 0.0, 1.0], 0.7);
        assert_eq!(c[2][0], 1.0);
        assert_eq!(c[1][1], 2.0);
        assert_eq!(c[0][2], 1.0);
        assert!((c[0][0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn hermite_quartic_constant_is_gaussian_moment() {
        let k = 0.4;
        let c = normal_order(&[0.0, 0.0, 0.0, 0.0, 1.0], k);
        assert!((c[0][0] - 3.0 * k * k).abs() < 1e-15);
        assert!((c[1][1] - 4.0 * 3.0 * k).abs() < 1e-14);
    }
}
