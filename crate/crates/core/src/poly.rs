//! Dense real polynomials in one variable.

use serde::{Deserialize, Serialize};

/// `c[0] + c[1] u + c[2] u^2 + ...`
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// Value and first derivative in one Horner pass.
    #[inline]
    pub fn eval_with_derivative(&self, u: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * u + p;
            p = p * u + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            out.push(c / (k + 1) as f64);
        }
        Poly::new(out)
    }

    /// Coefficients of `u -> p(a + u)`.
    pub fn shift(&self, a: f64) -> Poly {
        let mut c = self.coeffs.clone();
        shift_in_place(&mut c, a);
        Poly { coeffs: c }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k] += c;
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            out[k] += c;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `sum_k |c_k| x^k`, a bound on `|p(u)|` for `|u| <= x`.
    pub fn abs_bound(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c.abs();
        }
        acc
    }

    /// Radius beyond which the leading monomial dominates: for `|u| > R` the
    /// sign of `p(u)` equals the sign of `leading * u^degree`.
    pub fn dominance_radius(&self) -> f64 {
        let n = self.degree();
        if n == 0 {
            return 0.0;
        }
        let lower: f64 = self.coeffs[..n].iter().map(|c| c.abs()).sum();
        (lower / self.leading().abs()).max(1.0)
    }
}

/// In-place Taylor shift: replaces the coefficients of `p(u)` with those of
/// `p(a + u)`.
pub fn shift_in_place(c: &mut [f64], a: f64) {
    let n = c.len();
    if n < 2 || a == 0.0 {
        return;
    }
    for i in 0..n - 1 {
        for k in (i..n - 1).rev() {
            c[k] += a * c[k + 1];
        }
    }
}

/// Real roots of `p` in `[a, b]` located by sign changes on a grid of `n`
/// cells followed by bisection. Roots of even multiplicity are only found if
/// they coincide with a grid node.
pub fn bracketed_roots(p: &Poly, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (b - a) / n as f64;
    let mut x0 = a;
    let mut f0 = p.eval(x0);
    for i in 1..=n {
        let x1 = a + h * i as f64;
        let f1 = p.eval(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            roots.push(bisect(p, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots
}

fn bisect(p: &Poly, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}
