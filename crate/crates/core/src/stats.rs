//! Estimators shared by the simulators: diffusivity regression, batch means,
//! two-sample Kolmogorov-Smirnov, exponent fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_eff: f64,
    pub method: String,
}

impl Estimate {
    /// Mean and standard error of independent replicas.
    pub fn from_replicas(xs: &[f64], method: &str) -> Self {
        let n = xs.len() as f64;
        let m = mean(xs);
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: m,
            stderr: (var / n).sqrt(),
            n_eff: n,
            method: method.to_string(),
        }
    }

    /// `|self - other| / sqrt(se1^2 + se2^2)`
    pub fn z_against(&self, other: &Estimate) -> f64 {
        (self.value - other.value).abs() / (self.stderr.powi(2) + other.stderr.powi(2)).sqrt()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation with its approximate standard error `1/sqrt(n)`.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<Estimate> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::InsufficientData("correlation needs paired samples".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::InsufficientData("degenerate sample in correlation".into()));
    }
    let n = a.len() as f64;
    Ok(Estimate {
        value: sab / (saa * sbb).sqrt(),
        stderr: 1.0 / n.sqrt(),
        n_eff: n,
        method: "pearson".into(),
    })
}

/// Ordinary least-squares slope of `y` on `x` with intercept.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    weighted_line(x, y, None).map(|(_, b)| b)
}

/// Weighted least-squares line `y = a + b x`; returns `(a, b)`.
fn weighted_line(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let wt = |i: usize| w.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..x.len()).map(wt).sum();
    let mx = (0..x.len()).map(|i| wt(i) * x[i]).sum::<f64>() / sw;
    let my = (0..x.len()).map(|i| wt(i) * y[i]).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
        sxy += wt(i) * (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityEstimate {
    /// Slope of `E X_k(t)^2` per coordinate.
    pub per_coord: Vec<Estimate>,
    /// Slope of `E |X(t)|^2`.
    pub trace: Estimate,
    /// Slopes of `E X_k X_l`, `k < l`.
    pub off_diagonal: Vec<((usize, usize), Estimate)>,
    pub window: (f64, f64),
    pub points: usize,
}

/// Diffusivity matrix from replicas of `X(t)` sampled on a common time grid.
///
/// For every replica and pair `(k, l)` the products `X_k X_l` are regressed
/// on `t` (weighted least squares with weights `t^-2`, the variance growth of
/// a diffusive square) over the window `t >= burn_in * T`. Since the slope is
/// linear in the data, the mean of per-replica slopes equals the slope of the
/// empirical mean; its error bar comes from the spread across replicas.
pub fn msd_diffusivity(
    paths: &[Vec<Vec<f64>>],
    times: &[f64],
    burn_in: f64,
) -> Result<DiffusivityEstimate> {
    if paths.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "{} replicas, at least 30 required",
            paths.len()
        )));
    }
    let t_end = *times.last().ok_or_else(|| Error::InsufficientData("empty time grid".into()))?;
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] > 0.0 && times[i] >= burn_in * t_end)
        .collect();
    if idx.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "window has {} grid points, at least 10 required",
            idx.len()
        )));
    }
    let d = paths[0][0].len();
    let x: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let w: Vec<f64> = x.iter().map(|t| 1.0 / (t * t)).collect();
    let slope_of = |k: usize, l: usize| -> Result<Estimate> {
        let mut slopes = Vec::with_capacity(paths.len());
        for p in paths {
            if p.len() != times.len() {
                return Err(Error::InsufficientData("path length differs from time grid".into()));
            }
            let y: Vec<f64> = idx.iter().map(|&i| p[i][k] * p[i][l]).collect();
            let (_, b) = weighted_line(&x, &y, Some(&w))
                .ok_or_else(|| Error::InsufficientData("degenerate regression".into()))?;
            slopes.push(b);
        }
        Ok(Estimate::from_replicas(&slopes, "wls-msd"))
    };
    let per_coord = (0..d).map(|k| slope_of(k, k)).collect::<Result<Vec<_>>>()?;
    let mut off_diagonal = Vec::new();
    for k in 0..d {
        for l in k + 1..d {
            off_diagonal.push(((k, l), slope_of(k, l)?));
        }
    }
    let mut slopes = Vec::with_capacity(paths.len());
    for p in paths {
        let y: Vec<f64> = idx
            .iter()
            .map(|&i| p[i].iter().map(|v| v * v).sum::<f64>())
            .collect();
        slopes.push(weighted_line(&x, &y, Some(&w)).map(|(_, b)| b).unwrap_or(f64::NAN));
    }
    Ok(DiffusivityEstimate {
        per_coord,
        trace: Estimate::from_replicas(&slopes, "wls-msd"),
        off_diagonal,
        window: (x[0], t_end),
        points: idx.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' finite-sample correction of the Kolmogorov distribution).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 50 || b.len() < 50 {
        return Err(Error::InsufficientData("KS needs at least 50 points per sample".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InsufficientData("non-finite value in KS sample".into()));
    }
    let constant = |s: &[f64]| s.iter().all(|x| *x == s[0]);
    if constant(a) || constant(b) {
        return Err(Error::InsufficientData("degenerate (constant) KS sample".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut dmax: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        dmax = dmax.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * dmax;
    Ok(KsResult {
        statistic: dmax,
        p_value: kolmogorov_q(lambda),
    })
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Batch-means estimate of the mean of a stationary series. The batch size
/// doubles until the lag-1 autocorrelation of the batch means drops below
/// 0.1 (or fewer than 16 batches would remain). The error bar is the
/// standard error of the batch means; `n_eff` is the number of batches.
pub fn batch_means_ci(series: &[f64]) -> Result<Estimate> {
    if series.len() < 64 {
        return Err(Error::InsufficientData("batch means needs at least 64 points".into()));
    }
    let mut size = 1;
    loop {
        let nb = series.len() / size;
        let means: Vec<f64> = (0..nb)
            .map(|b| mean(&series[b * size..(b + 1) * size]))
            .collect();
        let rho = lag1_autocorrelation(&means);
        if rho < 0.1 || series.len() / (2 * size) < 16 {
            let mut e = Estimate::from_replicas(&means, "batch-means");
            e.method = format!("batch-means(size={size})");
            return Ok(e);
        }
        size *= 2;
    }
}

/// Two-sided confidence interval of level `level` for a batch-means
/// estimate, using Student-t quantiles with `n_eff - 1` degrees of freedom.
pub fn confidence_interval(e: &Estimate, level: f64) -> (f64, f64) {
    let df = (e.n_eff - 1.0).max(1.0);
    let t = StudentsT::new(0.0, 1.0, df)
        .map(|d| d.inverse_cdf(0.5 + 0.5 * level))
        .unwrap_or(1.96);
    (e.value - t * e.stderr, e.value + t * e.stderr)
}

pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..xs.len() {
        den += (xs[i] - m).powi(2);
        if i + 1 < xs.len() {
            num += (xs[i] - m) * (xs[i + 1] - m);
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Slope of `log y` against `log t` by least squares, with the residual
/// standard error of the slope.
pub fn exponent_fit(times: &[f64], values: &[f64]) -> Result<Estimate> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t > 0.0 && **v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData("exponent fit needs three positive points".into()));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (a, b) = weighted_line(&x, &y, None)
        .ok_or_else(|| Error::InsufficientData("degenerate exponent fit".into()))?;
    let mx = mean(&x);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let rss: f64 = x.iter().zip(&y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let n = x.len() as f64;
    Ok(Estimate {
        value: b,
        stderr: (rss / (n - 2.0) / sxx).sqrt(),
        n_eff: n,
        method: "log-log-ols".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_give_zero_statistic() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn constant_sample_rejected() {
        let a = vec![1.0; 60];
        let b: Vec<f64> = (0..60).map(|i| i as f64).collect();
        assert!(ks_two_sample(&a, &b).is_err());
    }

    #[test]
    fn planted_exponent() {
        let t: Vec<f64> = (1..50).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|t| 2.5 * t.powf(4.0 / 3.0)).collect();
        let e = exponent_fit(&t, &v).unwrap();
        assert!((e.value - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn planted_diffusivity() {
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let paths: Vec<Vec<Vec<f64>>> = (0..30)
            .map(|r| {
                let c = [1.0 + r as f64 * 0.01, 0.5, 2.0];
                times.iter().map(|t| c.iter().map(|c| t.sqrt() * c).collect()).collect()
            })
            .collect();
        let est = msd_diffusivity(&paths, &times, 0.1).unwrap();
        let expect0 = (0..30).map(|r| (1.0 + r as f64 * 0.01f64).powi(2)).sum::<f64>() / 30.0;
        assert!((est.per_coord[0].value - expect0).abs() < 1e-12);
        assert!((est.per_coord[1].value - 0.25).abs() < 1e-12);
        // pair (0, 2)
        let c02: Vec<f64> = (0..30).map(|r| (1.0 + r as f64 * 0.01) * 2.0).collect();
        assert!((est.off_diagonal[1].1.value - mean(&c02)).abs() < 1e-12);
    }

    #[test]
    fn short_window_rejected() {
        let times: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let paths = vec![vec![vec![0.0]; 8]; 30];
        assert!(msd_diffusivity(&paths, &times, 0.0).is_err());
    }
}
