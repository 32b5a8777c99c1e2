//! Krylov methods in a weighted inner product `<x, y> = sum w_i conj(x_i) y_i`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn winner(w: &[f64], x: &[C64], y: &[C64]) -> C64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((a, b), c)| a.conj() * b * *c)
        .sum()
}

pub fn wnorm(w: &[f64], x: &[C64]) -> f64 {
    x.iter()
        .zip(w)
        .map(|(a, c)| a.norm_sqr() * c)
        .sum::<f64>()
        .sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(a, b)` that
/// are below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..a.len() {
        let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
        q = a[i] - x - if i > 0 { off / q } else { 0.0 };
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_top(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// Operator norm estimate `sqrt(lambda_max(B* B))`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the top Ritz value over the last step.
    pub last_change: f64,
}

/// Operator norm of `B` from Lanczos on the self-adjoint `T = B* B`, with
/// full reorthogonalization. `apply_t` must be self-adjoint in the weighted
/// inner product.
pub fn lanczos_norm(
    weights: &[f64],
    mut apply_t: impl FnMut(&[C64]) -> Vec<C64>,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> NormEstimate {
    let n = weights.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            C64::new(a, b)
        })
        .collect();
    let nv = wnorm(weights, &v);
    if nv == 0.0 || n == 0 {
        return NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
            last_change: 0.0,
        };
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<C64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    let max_iter = max_iter.min(n).max(1);
    for it in 0..max_iter {
        let q = basis.last().unwrap().clone();
        let mut z = apply_t(&q);
        let a = winner(weights, &q, &z).re;
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = winner(weights, b, &z);
                axpy(&mut z, -c, b);
            }
        }
        let top = tridiagonal_top(&alpha, &beta);
        if prev.is_finite() {
            change = ((top - prev) / top.abs().max(1e-300)).abs();
        }
        prev = top;
        let bn = wnorm(weights, &z);
        let done = change < tol || bn <= 1e-13 * top.abs().max(1e-300);
        if done || it + 1 == max_iter {
            return NormEstimate {
                value: top.max(0.0).sqrt(),
                iterations: it + 1,
                converged: done,
                last_change: change,
            };
        }
        beta.push(bn);
        z.iter_mut().for_each(|x| *x /= bn);
        basis.push(z);
    }
    unreachable!()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES for `K x = b` with right preconditioning
/// `K P y = b, x = P y`, in the weighted inner product.
pub fn gmres(
    weights: &[f64],
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    precond: impl Fn(&mut [C64]),
    b: &[C64],
    restart: usize,
    max_iter: usize,
    tol: f64,
) -> (Vec<C64>, SolveInfo) {
    let n = b.len();
    let mut x = vec![ZERO; n];
    let bnorm = wnorm(weights, b);
    if bnorm == 0.0 {
        return (
            x,
            SolveInfo {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        );
    }
    let mut total = 0;
    let mut resid = 1.0;
    while total < max_iter {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
        let beta = wnorm(weights, &r);
        resid = beta / bnorm;
        if resid < tol {
            break;
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|u| u / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<C64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut k_used = 0;
        for j in 0..restart {
            let mut z = v[j].clone();
            precond(&mut z);
            let mut w = apply(&z);
            total += 1;
            let mut hj = vec![ZERO; j + 2];
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = winner(weights, vi, &w);
                    hj[i] += c;
                    axpy(&mut w, -c, vi);
                }
            }
            let wn = wnorm(weights, &w);
            hj[j + 1] = C64::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hj[i] + sn[i].conj() * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            let den = (hj[j].norm_sqr() + hj[j + 1].norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 {
                (C64::new(1.0, 0.0), ZERO)
            } else {
                (hj[j] / den, hj[j + 1] / den)
            };
            hj[j] = C64::new(den, 0.0);
            hj[j + 1] = ZERO;
            g.push(-s * g[j]);
            g[j] = c.conj() * g[j];
            cs.push(c);
            sn.push(s);
            h.push(hj);
            k_used = j + 1;
            resid = g[j + 1].norm() / bnorm;
            if resid < tol || wn == 0.0 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|u| u / wn).collect());
        }
        // back substitution on the triangular factor
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                acc -= h[k][i] * yk;
            }
            y[i] = acc / h[i][i];
        }
        let mut dx = vec![ZERO; n];
        for (yi, vi) in y.iter().zip(&v) {
            axpy(&mut dx, *yi, vi);
        }
        precond(&mut dx);
        axpy(&mut x, C64::new(1.0, 0.0), &dx);
        if resid < tol {
            // confirm with the true residual on the next pass
            let ax = apply(&x);
            let r: Vec<C64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
            resid = wnorm(weights, &r) / bnorm;
            if resid < tol * 10.0 {
                return (
                    x,
                    SolveInfo {
                        iterations: total,
                        residual: resid,
                        converged: true,
                    },
                );
            }
        }
    }
    (
        x,
        SolveInfo {
            iterations: total,
            residual: resid,
            converged: resid < tol,
        },
    )
}
