//! Operator-norm scans and the resolvent variance computation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::generator::Generator;
use super::grid::GridKind;
use super::krylov::{gmres, lanczos_norm, NormEstimate, SolveInfo};
use super::space::{FockSpace, GradedVector};
use crate::error::{invalid, Error, Result};
use crate::stats::ols_slope;

pub const LANCZOS_MAX_ITER: usize = 80;
pub const LANCZOS_TOL: f64 = 1e-10;

impl FockSpace {
    /// Adjoint of the difference operator (multiplier conjugated).
    pub fn apply_diff_adjoint(&self, dir: usize, v: &GradedVector) -> GradedVector {
        let mut out = v.clone();
        for s in &self.sectors {
            let r = self.range(s.n);
            for (x, &t) in out.data[r].iter_mut().zip(&s.total_id) {
                *x *= s.diff[dir][t as usize].conj();
            }
        }
        out
    }

    /// `A_+ = sum_dir a*_dir nabla_dir`.
    pub fn apply_raise(&self, v: &GradedVector) -> GradedVector {
        let mut out = self.zeros();
        for e in 0..self.grid.directions() {
            out = out.add(&self.create(e, &self.apply_diff(e, v)));
        }
        out
    }

    /// `A_+^* = sum_dir nabla_dir^* a_dir`.
    pub fn apply_raise_adjoint(&self, v: &GradedVector) -> GradedVector {
        let mut out = self.zeros();
        for e in 0..self.grid.directions() {
            out = out.add(&self.apply_diff_adjoint(e, &self.annihilate(e, v)));
        }
        out
    }

    fn embed(&self, x: &[C64], n: usize) -> GradedVector {
        let mut v = self.zeros();
        let r = self.range(n);
        v.data[r].copy_from_slice(x);
        v
    }

    /// Norm of the block `H_n -> H_m` of `B`, given `B` and `B*`.
    pub fn block_norm(
        &self,
        n: usize,
        m: usize,
        b: impl Fn(&GradedVector) -> GradedVector,
        b_adj: impl Fn(&GradedVector) -> GradedVector,
        seed: u64,
    ) -> NormEstimate {
        let weights = &self.sectors[n].weight;
        lanczos_norm(
            weights,
            |x| {
                let y = self.project(&b(&self.embed(x, n)), m);
                self.component(&b_adj(&y), n).to_vec()
            },
            seed,
            LANCZOS_MAX_ITER,
            LANCZOS_TOL,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub block: String,
    /// Source and target degree.
    pub n: usize,
    pub m: usize,
    pub estimate: NormEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub block: String,
    /// Least-squares slope of `log norm` against `log n`.
    pub exponent: f64,
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub grid: GridKind,
    pub n_max: usize,
    /// Scale `c` of the diagonal operator `D = c |Delta|`.
    pub diag_scale: f64,
    /// `|g_e|^2`, the commutator `[a_e, a*_e]`.
    pub kappa: f64,
    pub rows: Vec<NormRow>,
    pub fits: Vec<GrowthFit>,
    /// Fitted exponents of the odd blocks are at most 1/2 and those of the
    /// even blocks at most 2 (with slack `0.15`).
    pub odd_blocks_ok: bool,
    pub even_blocks_ok: bool,
    /// Largest `norm / n^2` over the `S_1` blocks: the empirical constant
    /// in the even-block bound.
    pub even_constant: Option<f64>,
    pub not_converged: Vec<String>,
}

pub const GROWTH_SLACK: f64 = 0.15;

/// Per-degree norms of the graded blocks for `n` in `degrees`, in the first
/// direction (all directions are equivalent by lattice symmetry).
pub fn norm_growth_scan(
    space: &FockSpace,
    generator: Option<&Generator>,
    degrees: &[usize],
    diag_scale: f64,
    seed: u64,
) -> Result<NormTable> {
    if degrees.is_empty() {
        return Err(invalid("degrees", "empty range"));
    }
    if let Some(&n) = degrees.iter().find(|&&n| n + 1 > space.n_max) {
        return Err(invalid("degrees", format!("degree {n} needs a cap of at least {}", n + 1)));
    }
    let e = 0;
    let dhalf = |v: &GradedVector| {
        let mut w = space.apply_abs_laplacian_pow(v, -0.5);
        w.scale(C64::new(diag_scale.powf(-0.5), 0.0));
        w
    };
    let mut rows = Vec::new();
    for (i, &n) in degrees.iter().enumerate() {
        let sd = seed.wrapping_add(i as u64 * 7919);
        rows.push(NormRow {
            block: "a_star".into(),
            n,
            m: n + 1,
            estimate: space.block_norm(n, n + 1, |v| space.create(e, v), |v| space.annihilate(e, v), sd),
        });
        rows.push(NormRow {
            block: "halfinv_a_star".into(),
            n,
            m: n + 1,
            estimate: space.block_norm(
                n,
                n + 1,
                |v| space.apply_abs_laplacian_pow(&space.create(e, v), -0.5),
                |v| space.annihilate(e, &space.apply_abs_laplacian_pow(v, -0.5)),
                sd + 1,
            ),
        });
        if n >= 1 {
            rows.push(NormRow {
                block: "a_plus".into(),
                n,
                m: n + 1,
                estimate: space.block_norm(
                    n,
                    n + 1,
                    |v| dhalf(&space.apply_raise(&dhalf(v))),
                    |v| dhalf(&space.apply_raise_adjoint(&dhalf(v))),
                    sd + 2,
                ),
            });
        }
        if let (Some(g), true) = (generator, n >= 1) {
            for j in -2i64..=2 {
                let m = n as i64 + 2 * j;
                if m < 1 || m as usize > space.n_max {
                    continue;
                }
                let m = m as usize;
                rows.push(NormRow {
                    block: format!("s1_shift{:+}", 2 * j),
                    n,
                    m,
                    estimate: space.block_norm(
                        n,
                        m,
                        |v| dhalf(&g.apply_s1(&dhalf(v))),
                        |v| dhalf(&g.apply_s1(&dhalf(v))),
                        sd.wrapping_add((5 + j) as u64),
                    ),
                });
            }
        }
    }
    let mut names: Vec<String> = rows.iter().map(|r| r.block.clone()).collect();
    names.dedup();
    names.sort();
    names.dedup();
    let mut fits = Vec::new();
    for name in &names {
        let pts: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| &r.block == name && r.n >= 1 && r.estimate.value > 0.0)
            .map(|r| (r.n, r.estimate.value))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let x: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        if let Some(slope) = ols_slope(&x, &y) {
            fits.push(GrowthFit {
                block: name.clone(),
                exponent: slope,
                degrees: pts.iter().map(|p| p.0).collect(),
            });
        }
    }
    let odd_blocks_ok = fits
        .iter()
        .filter(|f| f.block == "halfinv_a_star" || f.block == "a_plus")
        .all(|f| f.exponent <= 0.5 + GROWTH_SLACK);
    let even_blocks_ok = fits
        .iter()
        .filter(|f| f.block.starts_with("s1"))
        .all(|f| f.exponent <= 2.0 + GROWTH_SLACK);
    let even_constant = rows
        .iter()
        .filter(|r| r.block.starts_with("s1"))
        .map(|r| r.estimate.value / (r.n as f64).powi(2))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let not_converged = rows
        .iter()
        .filter(|r| !r.estimate.converged)
        .map(|r| format!("{}[{}->{}]", r.block, r.n, r.m))
        .collect();
    Ok(NormTable {
        grid: space.grid.kind.clone(),
        n_max: space.n_max,
        diag_scale,
        kappa: space.grid.norm2(&space.kernels[e]),
        rows,
        fits,
        odd_blocks_ok,
        even_blocks_ok,
        even_constant,
        not_converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventOptions {
    /// Decreasing schedule of spectral parameters.
    pub lambdas: Vec<f64>,
    pub restart: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        ResolventOptions {
            lambdas: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            restart: 30,
            max_iter: 3000,
            tol: 1e-10,
        }
    }
}

impl ResolventOptions {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(invalid("lambdas", "need positive spectral parameters"));
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("lambdas", "schedule must be strictly decreasing"));
        }
        if self.restart == 0 {
            return Err(invalid("restart", "must be positive"));
        }
        Ok(())
    }
}

/// `u_lambda = (lambda - G)^{-1} f` along the schedule.
pub fn solve_resolvents(
    gen: &Generator,
    f: &GradedVector,
    opts: &ResolventOptions,
) -> Result<Vec<(GradedVector, SolveInfo)>> {
    opts.validate()?;
    let sp = gen.space;
    let weights = sp.weights();
    let mut diag = Vec::with_capacity(sp.dim());
    for s in &sp.sectors {
        for &t in &s.total_id {
            diag.push(gen.gamma * s.lap[t as usize]);
        }
    }
    let mut out = Vec::new();
    for &lambda in &opts.lambdas {
        let apply = |x: &[C64]| -> Vec<C64> {
            let v = GradedVector { data: x.to_vec() };
            let g = gen.apply_g_literal(&v);
            x.iter().zip(&g.data).map(|(a, b)| a * lambda - b).collect()
        };
        let pre = |x: &mut [C64]| {
            for (v, d) in x.iter_mut().zip(&diag) {
                *v /= lambda + d;
            }
        };
        let (x, info) = gmres(&weights, apply, pre, &f.data, opts.restart, opts.max_iter, opts.tol);
        if !info.converged {
            return Err(Error::NotConverged(format!(
                "resolvent solve at lambda = {lambda}: residual {:.3e} after {} iterations",
                info.residual, info.iterations
            )));
        }
        out.push((GradedVector { data: x }, info));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventStep {
    pub lambda: f64,
    /// `lambda |u_lambda|^2`.
    pub lambda_norm2: f64,
    /// `2 Re (u_lambda, f)`.
    pub pairing: f64,
    /// `|S^{1/2} u_lambda|^2 = Re (u_lambda, S u_lambda)`.
    pub dirichlet: f64,
    /// Norm squared of the creation flux out of the top degree.
    pub truncation_flux2: f64,
    pub solve: SolveInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    pub steps: Vec<ResolventStep>,
    /// `(lambda + lambda') Re (u_lambda, u_lambda')` for consecutive pairs.
    pub cross_form: Vec<f64>,
    pub lambda_norm2_decreasing: bool,
    /// Relative change of the pairing between the last two parameters.
    pub last_relative_change: f64,
    /// One-step linear extrapolation of the pairing to `lambda = 0`.
    pub extrapolated: f64,
}

fn summarize(gen: &Generator, f: &GradedVector, sols: &[(GradedVector, SolveInfo)], lambdas: &[f64]) -> ResolventReport {
    let sp = gen.space;
    let steps: Vec<ResolventStep> = sols
        .iter()
        .zip(lambdas)
        .map(|((u, info), &lambda)| ResolventStep {
            lambda,
            lambda_norm2: lambda * sp.norm2(u),
            pairing: 2.0 * sp.inner(u, f).re,
            dirichlet: sp.inner(u, &gen.apply_s(u)).re,
            truncation_flux2: gen.truncation_flux2(u),
            solve: info.clone(),
        })
        .collect();
    let cross_form = sols
        .windows(2)
        .zip(lambdas.windows(2))
        .map(|(s, l)| (l[0] + l[1]) * sp.inner(&s[0].0, &s[1].0).re)
        .collect();
    let decreasing = steps.windows(2).all(|w| w[1].lambda_norm2 < w[0].lambda_norm2);
    let k = steps.len();
    let (change, extrap) = if k >= 2 {
        let (a, b) = (&steps[k - 2], &steps[k - 1]);
        let change = ((b.pairing - a.pairing) / b.pairing.abs().max(1e-300)).abs();
        let slope = (a.pairing - b.pairing) / (a.lambda - b.lambda);
        (change, b.pairing - slope * b.lambda)
    } else {
        (f64::NAN, steps[0].pairing)
    };
    ResolventReport {
        steps,
        cross_form,
        lambda_norm2_decreasing: decreasing,
        last_relative_change: change,
        extrapolated: extrap,
    }
}

/// Solves along the schedule and reports the trends of `lambda |u|^2`,
/// `2 (u_lambda, f)` and the cross form.
pub fn resolvent_sigma2(gen: &Generator, f: &GradedVector, opts: &ResolventOptions) -> Result<ResolventReport> {
    let sols = solve_resolvents(gen, f, opts)?;
    Ok(summarize(gen, f, &sols, &opts.lambdas))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KvReport {
    pub axis: usize,
    pub n_max: usize,
    /// `E (omega(0) - omega(e))^2` on the grid.
    pub kappa: f64,
    /// `2 (gamma + E s(X))`, `X ~ N(0, kappa)`: the jump martingale's
    /// quadratic variation rate under the Gaussian measure.
    pub quadratic_variation_model: f64,
    /// Resolvent for `f = phi~_l`.
    pub tilde: ResolventReport,
    /// `2 Re (phi~ - phi-, u_lambda)` with `u_lambda = (lambda - G)^{-1}(phi- + phi~)`,
    /// per schedule entry.
    pub correction: Vec<f64>,
    pub correction_extrapolated: f64,
}

impl KvReport {
    /// Total variance from a supplied martingale quadratic variation.
    pub fn total(&self, quadratic_variation: f64) -> f64 {
        quadratic_variation + self.correction.last().copied().unwrap_or(0.0)
    }
}

/// Gaussian moment `E s(X)` for `X ~ N(0, kappa)`.
pub fn gaussian_expectation(s_dense: &[f64], kappa: f64) -> f64 {
    s_dense
        .iter()
        .enumerate()
        .filter(|(m, _)| m % 2 == 0)
        .map(|(m, &c)| {
            let k = m / 2;
            c * (1..=k).map(|i| (2 * i - 1) as f64).product::<f64>() * kappa.powi(k as i32)
        })
        .sum()
}

/// Resolvent correction to the diffusivity along `axis`:
/// `sigma^2 = QV + 2 lim Re (phi~ - phi-, (lambda - G)^{-1} (phi- + phi~))`.
pub fn kv_variance(gen: &Generator, axis: usize, opts: &ResolventOptions) -> Result<KvReport> {
    if axis >= gen.space.grid.d {
        return Err(invalid("axis", "out of range"));
    }
    let sp = gen.space;
    let tilde = gen.phi_tilde(axis);
    let bar = gen.phi_bar(axis);
    let sol_t = solve_resolvents(gen, &tilde, opts)?;
    let sol_b = solve_resolvents(gen, &bar, opts)?;
    let pair = tilde.sub(&bar);
    let correction: Vec<f64> = sol_t
        .iter()
        .zip(&sol_b)
        .map(|((ut, _), (ub, _))| 2.0 * sp.inner(&pair, &ut.add(ub)).re)
        .collect();
    let k = correction.len();
    let correction_extrapolated = if k >= 2 {
        let l = &opts.lambdas;
        let slope = (correction[k - 2] - correction[k - 1]) / (l[k - 2] - l[k - 1]);
        correction[k - 1] - slope * l[k - 1]
    } else {
        correction[0]
    };
    let kappa = gen.kappa[2 * axis];
    Ok(KvReport {
        axis,
        n_max: sp.n_max,
        kappa,
        quadratic_variation_model: 2.0 * (gen.gamma + gaussian_expectation(&gen.s_dense, kappa)),
        tilde: summarize(gen, &tilde, &sol_t, &opts.lambdas),
        correction,
        correction_extrapolated,
    })
}
