//! Jump-rate functions of the self-avoiding walk and the interaction potential
//! of the self-repelling polymer.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::{bracketed_roots, Poly};

/// Odd part `r` of the rate function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OddPart {
    /// `r(u) = u`
    Linear,
    /// Odd Taylor series given by `r'(0), r'''(0), r^(5)(0), ...`.
    ///
    /// With `truncated = true` the list is read as the leading part of an
    /// infinite series; the remainder enters only the convergence diagnostic
    /// of [`check_conditions`], while simulation uses the polynomial itself.
    Entire {
        derivatives: Vec<f64>,
        #[serde(default)]
        truncated: bool,
    },
}

impl OddPart {
    /// Odd derivatives at zero, `r^(1)(0), r^(3)(0), ...`.
    pub fn odd_derivatives(&self) -> Vec<f64> {
        match self {
            OddPart::Linear => vec![1.0],
            OddPart::Entire { derivatives, .. } => derivatives.clone(),
        }
    }

    fn poly(&self) -> Poly {
        let ders = self.odd_derivatives();
        let mut coeffs = vec![0.0; 2 * ders.len()];
        let mut fact = 1.0;
        for (j, d) in ders.iter().enumerate() {
            let n = 2 * j + 1;
            // n! built incrementally: fact holds (n-1)!
            fact *= n as f64;
            coeffs[n] = d / fact;
            fact *= (n + 1) as f64;
        }
        Poly::new(coeffs)
    }
}

/// Plain parameters of a rate function, as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub gamma: f64,
    /// Coefficients of the even part: `s0, s2, s4, ...`
    #[serde(default)]
    pub s_coeffs: Vec<f64>,
    pub r: OddPart,
    pub c: f64,
    pub eps: f64,
    pub c_dom: f64,
}

/// Rate function `w(u) = gamma + s(u) + r(u)` with `s` even and `r` odd.
///
/// The polynomial forms of `w`, its antiderivative and the parts are cached at
/// construction, so the value is immutable and cheap to share across threads.
#[derive(Debug, Clone)]
pub struct RateFunction {
    params: RateParams,
    s: Poly,
    r: Poly,
    w: Poly,
    w_inf: f64,
    w_argmin: f64,
}

impl RateFunction {
    pub fn new(params: RateParams) -> Result<Self> {
        if !(params.gamma > 0.0 && params.gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive and finite"));
        }
        for (name, v) in [("c", params.c), ("eps", params.eps), ("c_dom", params.c_dom)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        if params.s_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("s_coeffs", "non-finite coefficient"));
        }
        if let OddPart::Entire { derivatives, .. } = &params.r {
            if derivatives.iter().any(|c| !c.is_finite()) {
                return Err(invalid("r", "non-finite derivative"));
            }
        }
        let mut s = vec![0.0; 2 * params.s_coeffs.len().max(1) - 1];
        for (j, c) in params.s_coeffs.iter().enumerate() {
            s[2 * j] = *c;
        }
        let s = Poly::new(s);
        let r = params.r.poly();
        let w = s.add(&r).add(&Poly::constant(params.gamma));
        let (w_inf, w_argmin) = poly_infimum(&w, DEFAULT_U_MAX);
        Ok(RateFunction {
            params,
            s,
            r,
            w,
            w_inf,
            w_argmin,
        })
    }

    /// Builds a rate function from dense coefficient lists `[c0, c1, c2, ...]`
    /// of `s` and `r`, rejecting lists of the wrong parity.
    pub fn from_dense(
        gamma: f64,
        s_dense: &[f64],
        r_dense: &[f64],
        c: f64,
        eps: f64,
        c_dom: f64,
    ) -> Result<Self> {
        if let Some(k) = s_dense.iter().skip(1).step_by(2).position(|c| *c != 0.0) {
            return Err(Error::Parity(format!(
                "s has a nonzero coefficient at odd power {}",
                2 * k + 1
            )));
        }
        if let Some(k) = r_dense.iter().step_by(2).position(|c| *c != 0.0) {
            return Err(Error::Parity(format!(
                "r has a nonzero coefficient at even power {}",
                2 * k
            )));
        }
        let s_coeffs = s_dense.iter().step_by(2).copied().collect();
        let mut derivatives = Vec::new();
        let mut fact = 1.0;
        for (n, c) in r_dense.iter().enumerate().skip(1) {
            fact *= n as f64;
            if n % 2 == 1 {
                derivatives.push(c * fact);
            }
        }
        RateFunction::new(RateParams {
            gamma,
            s_coeffs,
            r: OddPart::Entire {
                derivatives,
                truncated: false,
            },
            c,
            eps,
            c_dom,
        })
    }

    pub fn params(&self) -> &RateParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.w.eval(u)
    }

    pub fn s(&self) -> &Poly {
        &self.s
    }

    pub fn r(&self) -> &Poly {
        &self.r
    }

    pub fn w(&self) -> &Poly {
        &self.w
    }

    /// Exact infimum of `w` over the real line (minus infinity if unbounded).
    pub fn w_inf(&self) -> f64 {
        self.w_inf
    }

    pub fn w_argmin(&self) -> f64 {
        self.w_argmin
    }

    /// Quartic-or-lower `s` with zero odd coefficients; the regime of the
    /// Fock-space generator.
    pub fn s_is_quartic(&self) -> bool {
        self.s.degree() <= 4
    }

    pub fn r_is_linear(&self) -> bool {
        self.r == Poly::new(vec![0.0, 1.0])
    }
}

/// Rates used by the event sampler.
///
/// `floor` must be a strictly positive lower bound of `rate`; it bounds the
/// waiting time and defines the minorizing part of the jump decomposition.
pub trait JumpRate: Send + Sync {
    fn rate(&self, u: f64) -> f64;

    fn floor(&self) -> f64;

    /// Where the floor is attained, if known.
    fn floor_at(&self) -> f64 {
        f64::NAN
    }

    /// An upper bound of `rate` on `[a, b]`.
    fn sup_on(&self, a: f64, b: f64) -> f64;

    /// Polynomial form, when available, for exact hazard integration.
    fn polynomial(&self) -> Option<&Poly> {
        None
    }

    /// Whether the rate went through [`check_conditions`].
    fn verified(&self) -> bool {
        false
    }
}

impl JumpRate for RateFunction {
    #[inline]
    fn rate(&self, u: f64) -> f64 {
        self.w.eval(u)
    }

    fn floor_at(&self) -> f64 {
        self.w_argmin
    }

    fn floor(&self) -> f64 {
        self.w_inf
    }

    fn sup_on(&self, a: f64, b: f64) -> f64 {
        poly_sup_bound(&self.w, a, b)
    }

    fn polynomial(&self) -> Option<&Poly> {
        Some(&self.w)
    }

    fn verified(&self) -> bool {
        true
    }
}

/// User-supplied rate closure. It can be simulated (by thinning) but is never
/// condition-checked.
pub struct CustomRate<F, G> {
    pub rate: F,
    /// `sup_on(a, b)` must bound `rate` from above on `[a, b]`.
    pub sup_on: G,
    pub floor: f64,
}

impl<F, G> JumpRate for CustomRate<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn rate(&self, u: f64) -> f64 {
        (self.rate)(u)
    }

    fn floor(&self) -> f64 {
        self.floor
    }

    fn sup_on(&self, a: f64, b: f64) -> f64 {
        (self.sup_on)(a, b)
    }
}

/// Upper bound for `p` on `[a, b]`: the maximum over a 32-cell grid plus the
/// Lipschitz slack of the cell width.
pub fn poly_sup_bound(p: &Poly, a: f64, b: f64) -> f64 {
    const CELLS: usize = 32;
    let h = (b - a) / CELLS as f64;
    let mut m = f64::NEG_INFINITY;
    for i in 0..=CELLS {
        m = m.max(p.eval(a + h * i as f64));
    }
    let lip = p.derivative().abs_bound(a.abs().max(b.abs()));
    m + 0.5 * h * lip
}

pub const DEFAULT_U_MAX: f64 = 50.0;
pub const DEFAULT_GRID: usize = 20_001;

/// Infimum of `p` over the real line: critical points inside the dominance
/// radius, located by bisection on `p'`.
fn poly_infimum(p: &Poly, u_max: f64) -> (f64, f64) {
    let n = p.degree();
    if n == 0 {
        return (p.coeffs[0], 0.0);
    }
    if n % 2 == 1 || p.leading() < 0.0 {
        return (f64::NEG_INFINITY, f64::NAN);
    }
    let dp = p.derivative();
    let radius = u_max.max(dp.dominance_radius()) + 1.0;
    let mut best = (f64::INFINITY, 0.0);
    for x in bracketed_roots(&dp, -radius, radius, 40_000) {
        let v = p.eval(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// A series value or a divergence flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeriesSum {
    Finite { value: f64, tail_bound: f64 },
    Divergent,
}

impl SeriesSum {
    pub fn value(&self) -> Option<f64> {
        match self {
            SeriesSum::Finite { value, .. } => Some(*value),
            SeriesSum::Divergent => None,
        }
    }
}

/// `sum_n (2/c)^(n/2) |r^(n)(0)|` over the odd orders present.
pub fn entire_series(r: &OddPart, c: f64) -> SeriesSum {
    let terms: Vec<f64> = r
        .odd_derivatives()
        .iter()
        .enumerate()
        .map(|(j, d)| (2.0 / c).powf((2 * j + 1) as f64 / 2.0) * d.abs())
        .collect();
    let partial: f64 = terms.iter().sum();
    let truncated = matches!(r, OddPart::Entire { truncated: true, .. });
    if !truncated {
        return if partial.is_finite() {
            SeriesSum::Finite {
                value: partial,
                tail_bound: 0.0,
            }
        } else {
            SeriesSum::Divergent
        };
    }
    // ratio test on the trailing terms of the declared series
    let k = terms.len();
    if k < 2 {
        return SeriesSum::Divergent;
    }
    let (a, b) = (terms[k - 2], terms[k - 1]);
    if a == 0.0 {
        return SeriesSum::Divergent;
    }
    let q = b / a;
    if q >= 1.0 || !partial.is_finite() {
        return SeriesSum::Divergent;
    }
    let tail = b * q / (1.0 - q);
    SeriesSum::Finite {
        value: partial + tail,
        tail_bound: tail,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub u_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `inf w > 0`, grid plus tail dominance.
    pub ellipticity: bool,
    /// `inf r' > c`.
    pub convexity: bool,
    /// `s(u) < C exp((c - eps) u^2 / 2)` for the configured `C`.
    pub gaussian_domination: bool,
    /// Convergence of `sum (2/c)^(n/2) |r^(n)(0)|`.
    pub r_entire: bool,
    pub entire_sum: SeriesSum,
    pub w_inf: f64,
    pub w_argmin: f64,
    /// Configured gamma is a lower bound of w.
    pub gamma_is_lower_bound: bool,
    pub r_prime_inf: f64,
    /// Smallest `C` for which the domination inequality holds (as a sup).
    pub fitted_c_dom: f64,
    pub margins: Margins,
    pub grid: GridInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub ellipticity: f64,
    pub convexity: f64,
    pub gaussian_domination: f64,
}

/// Evaluates the standing conditions on the rate function over a grid on
/// `[-u_max, u_max]`, with leading-coefficient dominance for the tails.
pub fn check_conditions(rf: &RateFunction) -> ConditionReport {
    check_conditions_on(rf, DEFAULT_U_MAX, DEFAULT_GRID)
}

pub fn check_conditions_on(rf: &RateFunction, u_max: f64, points: usize) -> ConditionReport {
    let p = &rf.params;
    let grid: Vec<f64> = (0..points)
        .map(|i| -u_max + 2.0 * u_max * i as f64 / (points - 1) as f64)
        .collect();

    // ellipticity
    let grid_min_w = grid.iter().map(|&u| rf.w.eval(u)).fold(f64::INFINITY, f64::min);
    let w_inf = rf.w_inf.min(grid_min_w);
    let ellipticity = w_inf > 0.0 && tail_positive(&rf.w, u_max);

    // convexity: r'(u) - c > 0
    let rp = rf.r.derivative();
    let rp_shift = rp.add(&Poly::constant(-p.c));
    let (rp_inf, _) = poly_infimum(&rp, u_max);
    let rp_grid_min = grid.iter().map(|&u| rp.eval(u)).fold(f64::INFINITY, f64::min);
    let r_prime_inf = rp_inf.min(rp_grid_min);
    let convexity = r_prime_inf > p.c && tail_positive(&rp_shift, u_max);

    let fitted = fitted_domination_constant(&rf.s, p.c - p.eps, &grid, u_max);
    let gaussian_domination = fitted < p.c_dom;

    let entire_sum = entire_series(&p.r, p.c);
    ConditionReport {
        ellipticity,
        convexity,
        gaussian_domination,
        r_entire: matches!(entire_sum, SeriesSum::Finite { .. }),
        entire_sum,
        w_inf,
        w_argmin: rf.w_argmin,
        gamma_is_lower_bound: p.gamma <= w_inf,
        r_prime_inf,
        fitted_c_dom: fitted,
        margins: Margins {
            ellipticity: w_inf,
            convexity: r_prime_inf - p.c,
            gaussian_domination: p.c_dom - fitted,
        },
        grid: GridInfo { u_max, points },
    }
}

/// Sign of `p` for `|u| >= u_max` decided by dominance of the leading term.
fn tail_positive(p: &Poly, u_max: f64) -> bool {
    let n = p.degree();
    if n == 0 {
        return p.coeffs[0] > 0.0;
    }
    if n % 2 == 1 || p.leading() <= 0.0 {
        return false;
    }
    let r = p.dominance_radius();
    if u_max > r {
        return true;
    }
    // grid edge inside the dominance radius: sample the gap densely
    let steps = 100_000;
    (0..=steps).all(|i| {
        let u = u_max + (r - u_max) * i as f64 / steps as f64;
        p.eval(u) > 0.0 && p.eval(-u) > 0.0
    })
}

/// `sup_u s(u) exp(-a u^2 / 2)` with `a = c - eps`.
fn fitted_domination_constant(s: &Poly, a: f64, grid: &[f64], u_max: f64) -> f64 {
    if s.degree() > 0 && a <= 0.0 {
        return if s.leading() > 0.0 { f64::INFINITY } else { s.coeffs[0].max(0.0) };
    }
    let mut sup = grid
        .iter()
        .map(|&u| s.eval(u) * (-0.5 * a * u * u).exp())
        .fold(f64::NEG_INFINITY, f64::max);
    // Tail: |u|^k exp(-a u^2/2) decreases once u^2 > k/a.
    let k = s.degree() as f64;
    if u_max * u_max > k / a.max(f64::MIN_POSITIVE) {
        sup = sup.max(s.abs_bound(u_max) * (-0.5 * a * u_max * u_max).exp());
    } else {
        sup = f64::INFINITY;
    }
    sup
}

/// Interaction potential `V(x) = a exp(-|x|^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub amplitude: f64,
    pub width: f64,
    pub d: usize,
}

impl Potential {
    pub fn gaussian(amplitude: f64, width: f64, d: usize) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(invalid("amplitude", "must be positive and finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", "must be positive and finite"));
        }
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        Ok(Potential {
            amplitude,
            width,
            d,
        })
    }

    #[inline]
    pub fn eval_r2(&self, r2: f64) -> f64 {
        self.amplitude * (-r2 / (self.width * self.width)).exp()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_r2(x.iter().map(|v| v * v).sum())
    }

    /// `grad V(x) = -(2x / sigma^2) V(x)`
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let v = self.eval(x);
        let k = -2.0 * v / (self.width * self.width);
        x.iter().map(|xi| k * xi).collect()
    }

    /// `F = -grad V`
    pub fn force(&self, x: &[f64]) -> Vec<f64> {
        self.grad(x).into_iter().map(|g| -g).collect()
    }

    /// Fourier transform under `(2 pi)^(-d/2) int e^{ipx} V(x) dx`.
    pub fn hat_r2(&self, p2: f64) -> f64 {
        let s2 = self.width * self.width;
        self.amplitude * (0.5 * s2).powf(0.5 * self.d as f64) * (-0.25 * s2 * p2).exp()
    }

    pub fn hat(&self, p: &[f64]) -> f64 {
        self.hat_r2(p.iter().map(|v| v * v).sum())
    }

    /// Radius beyond which `V < tol`.
    pub fn cutoff_radius(&self, tol: f64) -> f64 {
        if self.amplitude <= tol {
            return 0.0;
        }
        self.width * (self.amplitude / tol).ln().sqrt()
    }

    /// Width of the Gaussian `U` with `U * U = V`; `U(x) = b exp(-2|x|^2/sigma^2)`
    /// has width `sigma / sqrt 2`.
    pub fn root_width(&self) -> f64 {
        self.width / std::f64::consts::SQRT_2
    }

    /// Fourier transform of the convolution root: `(2 pi)^(d/2) Uhat^2 = Vhat`.
    pub fn root_hat(&self, p: &[f64]) -> f64 {
        (2.0 * std::f64::consts::PI).powf(-0.25 * self.d as f64) * self.hat(p).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn gaussian_mode(s4: f64) -> RateFunction {
        RateFunction::new(RateParams {
            gamma: 1.0,
            s_coeffs: vec![0.0, 0.0, s4],
            r: OddPart::Linear,
            c: 0.9,
            eps: 0.1,
            c_dom: 1e3,
        })
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let rf = gaussian_mode(0.25);
        assert_eq!(rf.eval(1.0), 2.25);
        assert!((rf.w_inf() - 0.25).abs() < 1e-12);
        assert!((rf.w_argmin() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn preset_passes_all_conditions() {
        let rep = check_conditions(&gaussian_mode(0.25));
        assert!(rep.ellipticity && rep.convexity && rep.gaussian_domination && rep.r_entire);
        let v = rep.entire_sum.value().unwrap();
        assert!((v - (2.0f64 / 0.9).sqrt()).abs() < 1e-12);
        assert!(!rep.gamma_is_lower_bound);
    }

    #[test]
    fn sinh_series_diverges() {
        let rf = RateFunction::new(RateParams {
            gamma: 1.0,
            s_coeffs: vec![],
            r: OddPart::Entire {
                derivatives: vec![1.0; 12],
                truncated: true,
            },
            c: 0.9,
            eps: 0.1,
            c_dom: 1.0,
        })
        .unwrap();
        let rep = check_conditions(&rf);
        assert!(rep.convexity);
        assert!(!rep.r_entire);
        assert_eq!(rep.entire_sum, SeriesSum::Divergent);
    }

    #[test]
    fn pure_linear_is_not_elliptic() {
        let rf = RateFunction::new(RateParams {
            gamma: 1.0,
            s_coeffs: vec![],
            r: OddPart::Linear,
            c: 0.9,
            eps: 0.1,
            c_dom: 1.0,
        })
        .unwrap();
        assert_eq!(rf.eval(-2.0), -1.0);
        assert!(!check_conditions(&rf).ellipticity);
    }

    #[test]
    fn dense_parity_rejected() {
        assert!(matches!(
            RateFunction::from_dense(1.0, &[0.0, 1.0], &[0.0, 1.0], 0.5, 0.1, 1.0),
            Err(Error::Parity(_))
        ));
        assert!(matches!(
            RateFunction::from_dense(1.0, &[0.0], &[1.0, 1.0], 0.5, 0.1, 1.0),
            Err(Error::Parity(_))
        ));
        let rf = RateFunction::from_dense(1.0, &[0.0, 0.0, 0.0, 0.0, 0.25], &[0.0, 1.0], 0.5, 0.1, 1.0)
            .unwrap();
        assert_eq!(rf.eval(1.0), 2.25);
    }

    #[test]
    fn potential_examples() {
        let v = Potential::gaussian(1.0, 1.0, 3).unwrap();
        assert_eq!(v.eval(&[0.0; 3]), 1.0);
        assert_eq!(v.force(&[0.0; 3]), vec![0.0; 3]);
        assert!((v.eval(&[1.0, 0.0, 0.0]) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v.hat(&[0.0; 3]) - 2f64.powf(-1.5)).abs() < 1e-15);
        let g = v.grad(&[0.3, -0.2, 0.1]);
        let val = v.eval(&[0.3, -0.2, 0.1]);
        assert!((g[0] + 2.0 * 0.3 * val).abs() < 1e-15);
    }
}
