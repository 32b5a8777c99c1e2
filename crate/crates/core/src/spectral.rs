//! Fourier-space quadratures: lattice symbol, lattice Green function, the
//! Gamma kernel, infrared integrals and the continuum constants of the
//! polymer.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::field::FieldSample;
use crate::model::{entire_series, OddPart, Potential, SeriesSum};
use crate::stats::Estimate;
use crate::torus::Torus;

/// `D(p) = sum_l (1 - cos p_l)`
#[inline]
pub fn lattice_symbol(p: &[f64]) -> f64 {
    p.iter().map(|x| 1.0 - x.cos()).sum()
}

/// `(1 - cos p_1) / D(p)`; zero at the origin by convention.
pub fn gamma_kernel(p: &[f64]) -> f64 {
    let dh = lattice_symbol(p);
    if dh == 0.0 {
        0.0
    } else {
        (1.0 - p[0].cos()) / dh
    }
}

/// Midpoint rule on `[-pi, pi]^d` with `m` nodes per axis. For even `m` the
/// nodes avoid the origin and are symmetric under `p -> -p` and under
/// permutations of the axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusQuadrature {
    pub d: usize,
    pub m: usize,
}

impl TorusQuadrature {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if m < 2 || m % 2 == 1 {
            return Err(invalid("M", "must be even and at least 2"));
        }
        Ok(TorusQuadrature { d, m })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = 2.0 * PI / self.m as f64;
        (0..self.m).map(|k| -PI + (k as f64 + 0.5) * h).collect()
    }

    /// `(2 pi)^{-d} int f(p) dp`, parallel over the first axis with a fixed
    /// reduction order.
    pub fn average<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let nodes = self.nodes();
        let d = self.d;
        let m = self.m;
        let slabs: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|k0| {
                let mut p = vec![0.0; d];
                p[0] = nodes[k0];
                let mut idx = vec![0usize; d];
                let mut acc = 0.0;
                loop {
                    for a in 1..d {
                        p[a] = nodes[idx[a]];
                    }
                    acc += f(&p);
                    // odometer over axes 1..d
                    let mut a = 1;
                    loop {
                        if a == d {
                            return acc;
                        }
                        idx[a] += 1;
                        if idx[a] < m {
                            break;
                        }
                        idx[a] = 0;
                        a += 1;
                    }
                }
            })
            .collect();
        slabs.iter().sum::<f64>() / (m as f64).powi(d as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEstimate {
    /// `(M, value)` for each rung.
    pub ladder: Vec<(usize, f64)>,
    /// One-level Richardson extrapolation from the last two rungs.
    pub value: f64,
    /// Error order assumed by the extrapolation.
    pub assumed_order: f64,
    /// `log2((I1 - I2) / (I2 - I3))` from the last three rungs, when defined.
    pub empirical_order: Option<f64>,
}

pub const DEFAULT_LADDER: [usize; 3] = [64, 128, 256];

/// Lattice Green function `C(x) = (2 pi)^{-d} int e^{-ip.x} / (2 D(p)) dp`,
/// the kernel of `(-Delta)^{-1}` on `Z^d`.
pub fn lattice_green(x: &[i64], ladder: &[usize]) -> Result<LadderEstimate> {
    let d = x.len();
    if d < 3 {
        return Err(invalid("d", "the lattice Green function is infinite for d < 3"));
    }
    check_ladder(ladder)?;
    let values: Vec<(usize, f64)> = ladder
        .iter()
        .map(|&m| (m, green_midpoint(x, m)))
        .collect();
    // the punctured midpoint sum of a |p|^-2 singularity errs at O(h^{d-2})
    let q = ((d - 2) as f64).min(2.0);
    Ok(richardson(values, q))
}

fn check_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() {
        return Err(invalid("ladder", "empty refinement ladder"));
    }
    for w in ladder.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(invalid("ladder", "rungs must double"));
        }
    }
    if ladder.iter().any(|m| m % 2 == 1) {
        return Err(invalid("ladder", "rungs must be even"));
    }
    Ok(())
}

fn richardson(values: Vec<(usize, f64)>, q: f64) -> LadderEstimate {
    let n = values.len();
    let value = if n >= 2 {
        let f = 2f64.powf(q);
        (f * values[n - 1].1 - values[n - 2].1) / (f - 1.0)
    } else {
        values[0].1
    };
    let empirical_order = if n >= 3 {
        let a = values[n - 3].1 - values[n - 2].1;
        let b = values[n - 2].1 - values[n - 1].1;
        if a != 0.0 && b != 0.0 && a / b > 0.0 {
            Some((a / b).log2())
        } else {
            None
        }
    } else {
        None
    };
    LadderEstimate {
        ladder: values,
        value,
        assumed_order: q,
        empirical_order,
    }
}

/// Midpoint sum of `cos(p.x) / (2 D(p))`, factorized per axis.
fn green_midpoint(x: &[i64], m: usize) -> f64 {
    let d = x.len();
    let h = 2.0 * PI / m as f64;
    let nodes: Vec<f64> = (0..m).map(|k| -PI + (k as f64 + 0.5) * h).collect();
    let omc: Vec<f64> = nodes.iter().map(|p| 1.0 - p.cos()).collect();
    let phase: Vec<Vec<Complex64>> = x
        .iter()
        .map(|&xi| nodes.iter().map(|p| Complex64::from_polar(1.0, p * xi as f64)).collect())
        .collect();

    fn rec(
        axis: usize,
        dsum: f64,
        ph: Complex64,
        omc: &[f64],
        phase: &[Vec<Complex64>],
    ) -> f64 {
        let d = phase.len();
        if axis == d - 1 {
            let mut acc = 0.0;
            for (k, o) in omc.iter().enumerate() {
                acc += (ph * phase[axis][k]).re / (2.0 * (dsum + o));
            }
            return acc;
        }
        let mut acc = 0.0;
        for (k, o) in omc.iter().enumerate() {
            acc += rec(axis + 1, dsum + o, ph * phase[axis][k], omc, phase);
        }
        acc
    }

    let slabs: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k0| rec(1, omc[k0], phase[0][k0], &omc, &phase))
        .collect();
    slabs.iter().sum::<f64>() / (m as f64).powi(d as i32)
}

/// Lattice Green function of the finite torus `(Z/LZ)^d` with the zero mode
/// removed: `L^{-d} sum_{p != 0} theta cos(p.x) / (2 D(p))`. This is the
/// exact covariance produced by the FFT field sampler with variance scale
/// `theta`.
pub fn torus_green(torus: &Torus, x: &[i64], theta: f64) -> f64 {
    let d = torus.d();
    let l = torus.side();
    let n = torus.sites();
    let mut acc = 0.0;
    let mut k = vec![0usize; d];
    for _ in 0..n {
        if k.iter().any(|v| *v != 0) {
            let mut dh = 0.0;
            let mut px = 0.0;
            for a in 0..d {
                let p = 2.0 * PI * k[a] as f64 / l as f64;
                dh += 1.0 - p.cos();
                px += p * x[a] as f64;
            }
            acc += px.cos() / (2.0 * dh);
        }
        for v in k.iter_mut() {
            *v += 1;
            if *v < l {
                break;
            }
            *v = 0;
        }
    }
    theta * acc / n as f64
}

/// Average of the Gamma kernel over the midpoint grid; equals `1/d` exactly
/// because the kernels for the `d` axes sum to one pointwise.
pub fn gamma_kernel_average(d: usize, m: usize) -> Result<f64> {
    let q = TorusQuadrature::new(d, m)?;
    Ok(q.average(gamma_kernel))
}

/// Maximum of the Gamma kernel over the grid nodes.
pub fn gamma_kernel_sup(d: usize, m: usize) -> Result<f64> {
    let q = TorusQuadrature::new(d, m)?;
    let nodes = q.nodes();
    // the sup is approached on the axis-1 line; scan a full grid anyway
    let mut best: f64 = 0.0;
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    loop {
        for a in 0..d {
            p[a] = nodes[idx[a]];
        }
        best = best.max(gamma_kernel(&p));
        let mut a = 0;
        loop {
            if a == d {
                return Ok(best);
            }
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraredReport {
    pub d: usize,
    /// `(M, int C(p) / D(p) dp)` per rung.
    pub ladder: Vec<(usize, f64)>,
    /// Relative change between the last two rungs.
    pub relative_change: f64,
    pub converged: bool,
    /// Least-squares slope of the values against `ln M`.
    pub log_slope: f64,
}

/// `int_{[-pi,pi]^d} C(p) / D(p) dp` on a refinement ladder. Divergence is
/// reported, never an error.
pub fn infrared_integral<F>(c_hat: F, d: usize, ladder: &[usize]) -> Result<InfraredReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_ladder(ladder)?;
    let vol = (2.0 * PI).powi(d as i32);
    let mut values = Vec::new();
    for &m in ladder {
        let q = TorusQuadrature::new(d, m)?;
        let v = vol * q.average(|p| c_hat(p) / lattice_symbol(p));
        values.push((m, v));
    }
    let n = values.len();
    let relative_change = if n >= 2 {
        ((values[n - 1].1 - values[n - 2].1) / values[n - 1].1).abs()
    } else {
        f64::NAN
    };
    let xs: Vec<f64> = values.iter().map(|(m, _)| (*m as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    let log_slope = crate::stats::ols_slope(&xs, &ys).unwrap_or(f64::NAN);
    Ok(InfraredReport {
        d,
        ladder: values,
        relative_change,
        converged: relative_change < 0.01,
        log_slope,
    })
}

/// Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|t| h * t).collect(),
    )
}

/// Radial integration of Gaussian-damped integrands `r^k A exp(-b r^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialQuadrature {
    pub d: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub r_max: f64,
    /// Analytic bound on the integral beyond `r_max`.
    pub tail_bound: f64,
}

impl RadialQuadrature {
    /// Rule for `int_0^inf r^k V(r) dr` with `V(r) = amp exp(-b r^2)`, the
    /// cutoff chosen so that the tail is below `tol`.
    pub fn for_gaussian(d: usize, k: i32, amp: f64, b: f64, tol: f64) -> Self {
        let mut r = (1.0f64).max(((k.max(1)) as f64 / b).sqrt());
        let tail = |r: f64| {
            let denom = 2.0 * b * r - k as f64 / r;
            if denom <= 0.0 {
                f64::INFINITY
            } else {
                amp * r.powi(k) * (-b * r * r).exp() / denom
            }
        };
        while tail(r) > tol {
            r *= 1.1;
        }
        let (nodes, weights) = gauss_legendre(256, 0.0, r);
        RadialQuadrature {
            d,
            nodes,
            weights,
            r_max: r,
            tail_bound: tail(r),
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(0.5 * d as f64) / statrs::function::gamma::gamma(0.5 * d as f64)
}

fn potential_radial(v: &Potential, k: i32) -> RadialQuadrature {
    let amp = v.hat_r2(0.0);
    let b = 0.25 * v.width * v.width;
    RadialQuadrature::for_gaussian(v.d, k, amp, b, 1e-15 * amp.max(1e-300))
}

/// `rho^2 = d^{-1} int |p|^{-2} Vhat(p) dp`.
pub fn rho_squared(v: &Potential) -> Result<f64> {
    let d = v.d;
    if d < 3 {
        return Err(invalid("d", "the infrared integral diverges for d < 3"));
    }
    let k = d as i32 - 3;
    let rq = potential_radial(v, k);
    let radial = rq.integrate(|r| r.powi(k) * v.hat_r2(r * r));
    Ok(sphere_area(d) * radial / d as f64)
}

/// `int p_l^2 / |p|^2 Vhat(p) dp`, reduced by symmetry to `d^{-1} int Vhat`.
pub fn variational_bound_continuum(v: &Potential, l: usize) -> Result<f64> {
    let d = v.d;
    if l >= d {
        return Err(invalid("l", "coordinate index out of range"));
    }
    let k = d as i32 - 1;
    let rq = potential_radial(v, k);
    let radial = rq.integrate(|r| r.powi(k) * v.hat_r2(r * r));
    Ok(sphere_area(d) * radial / d as f64)
}

/// Covariance of the continuum initial field,
/// `C(x) = (2 pi)^{-d/2} int e^{-ip.x} |p|^{-2} Vhat(p) dp`, for `d = 3`.
pub fn continuum_covariance(v: &Potential, x_norm: f64) -> Result<f64> {
    if v.d != 3 {
        return Err(Error::Unsupported(
            "continuum covariance is implemented for d = 3".into(),
        ));
    }
    let rq = potential_radial(v, 0);
    let radial = rq.integrate(|r| {
        let s = if x_norm == 0.0 {
            1.0
        } else {
            (r * x_norm).sin() / (r * x_norm)
        };
        s * v.hat_r2(r * r)
    });
    Ok((2.0 * PI).powf(-1.5) * 4.0 * PI * radial)
}

/// Explicit covariance bound `Z^2 n! m! (2/c)^{(n+m)/2}`.
pub fn covariance_bound(n: u32, m: u32, c: f64, z_half_c: f64) -> f64 {
    let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
    z_half_c * z_half_c * fact(n) * fact(m) * (2.0 / c).powf(0.5 * (n + m) as f64)
}

/// `4 Z^2 (sum_n |r^(n)(0)| (2/c)^{n/2})^2`.
pub fn entire_bound(r: &OddPart, c: f64, z_half_c: f64) -> SeriesSum {
    match entire_series(r, c) {
        SeriesSum::Finite { value, tail_bound } => {
            let z2 = 4.0 * z_half_c * z_half_c;
            SeriesSum::Finite {
                value: z2 * value * value,
                tail_bound: z2 * ((value + tail_bound).powi(2) - value * value).abs(),
            }
        }
        SeriesSum::Divergent => SeriesSum::Divergent,
    }
}

/// `(1 - lambda/c)^{-beta}`
pub fn z_bound(lambda: f64, c: f64, beta: f64) -> Result<f64> {
    if !(lambda < c) {
        return Err(invalid("lambda", "must be below c"));
    }
    Ok((1.0 - lambda / c).powf(-beta))
}

/// Monte Carlo estimate of `E exp(lambda (w(0) - w(e))^2)` over field
/// replicas. Each replica contributes the average over all sites and
/// directions (translation invariance); the error bar is across replicas.
pub fn z_lambda(fields: &[FieldSample], lambda: f64) -> Result<Estimate> {
    if fields.len() < 2 {
        return Err(Error::InsufficientData("need at least two field replicas".into()));
    }
    let mut per = Vec::with_capacity(fields.len());
    for f in fields {
        let torus = f.torus()?;
        let mut acc = 0.0;
        let mut count = 0usize;
        for site in 0..torus.sites() {
            for k in 0..torus.d() {
                let diff = f.values[site] - f.values[torus.neighbor(site, 2 * k)];
                acc += (lambda * diff * diff).exp();
                count += 1;
            }
        }
        if !acc.is_finite() {
            return Err(Error::MomentBlowUp(format!(
                "exp(lambda * diff^2) overflowed at lambda = {lambda}"
            )));
        }
        per.push(acc / count as f64);
    }
    Ok(Estimate::from_replicas(&per, "replica-mean"))
}
