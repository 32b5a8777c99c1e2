//! Aggregation of stored run records. Everything here is a function of the
//! records alone; no trajectory is simulated again.

use std::path::Path;

use serde::{Deserialize, Serialize};

use selfrepel_core::polymer::orthogonality_check;
use selfrepel_core::record::RunRecord;
use selfrepel_core::Error as CoreError;
use selfrepel_core::stats::{exponent_fit, ks_two_sample, msd_diffusivity, Estimate, KsResult};
use selfrepel_core::walk::{lln_check, stationarity_ks, yaglom_check};

use crate::error::{CliError, CliResult};

/// Below this many replicas the replica-based estimators are skipped.
pub const MIN_REPLICAS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub replicas: usize,
    pub horizon: f64,
    pub stationary: bool,
    pub wrap_around: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusivity: Option<Vec<Estimate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_diffusivity: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msd_exponent: Option<Estimate>,
    /// KS between the environment gradient at time 0 and at the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<Vec<KsResult>>,
    /// Fraction of replicas with `|X(T)|/T <= 3 sqrt(trace / T)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lln_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonality: Option<Vec<Estimate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition_residual: Option<f64>,
    /// Jump quadratic variation rate per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_variation: Option<Estimate>,
    /// `|z|` of the odd statistics under time reversal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaglom_z: Option<Vec<(String, f64)>>,
}

pub fn load_records(dir: &Path) -> CliResult<Vec<RunRecord>> {
    let rec_dir = dir.join("records");
    let mut paths: Vec<_> = std::fs::read_dir(&rec_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        out.push(serde_json::from_slice(&std::fs::read(&p)?)?);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("no records under {}", rec_dir.display())));
    }
    Ok(out)
}

pub fn summarize(records: &[RunRecord], burn_in: f64) -> CliResult<Report> {
    let first = records
        .first()
        .ok_or_else(|| CliError::Config("no records to summarize".into()))?;
    let horizon = first.times.last().copied().unwrap_or(0.0);
    let mut rep = Report {
        model: first.model.clone(),
        replicas: records.len(),
        horizon,
        stationary: records.iter().all(|r| r.stationary),
        wrap_around: records.iter().filter(|r| r.wrap_around).count(),
        diffusivity: None,
        trace_diffusivity: None,
        msd_exponent: None,
        stationarity: None,
        lln_fraction: None,
        orthogonality: None,
        decomposition_residual: None,
        quadratic_variation: None,
        yaglom_z: None,
    };
    let comps: Vec<_> = records
        .iter()
        .filter_map(|r| r.tsaw.as_ref().and_then(|s| s.compensators.as_ref()))
        .collect();
    if !comps.is_empty() {
        rep.decomposition_residual = Some(comps.iter().map(|c| c.residual).fold(0.0, f64::max));
    }
    if records.len() < MIN_REPLICAS || horizon <= 0.0 {
        return Ok(rep);
    }
    let paths: Vec<_> = records.iter().map(|r| r.positions.clone()).collect();
    let Some(est) = optional(msd_diffusivity(&paths, &first.times, burn_in))? else {
        return Ok(rep);
    };
    let threshold = 3.0 * (est.trace.value.max(0.0) / horizon).sqrt();
    let inside = records.iter().filter(|r| lln_check(r) <= threshold).count();
    rep.lln_fraction = Some(inside as f64 / records.len() as f64);
    rep.diffusivity = Some(est.per_coord);
    rep.trace_diffusivity = Some(est.trace);

    let (mut ts, mut msd) = (Vec::new(), Vec::new());
    for (i, &t) in first.times.iter().enumerate() {
        if t >= horizon / 10.0 {
            ts.push(t);
            msd.push(paths.iter().map(|p| p[i].iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / paths.len() as f64);
        }
    }
    rep.msd_exponent = exponent_fit(&ts, &msd).ok();

    if first.tsaw.is_some() {
        if rep.stationary {
            rep.stationarity = optional(stationarity_ks(records))?.map(|k| vec![k]);
        }
        rep.yaglom_z = optional(yaglom_check(records))?.map(|ys| ys.into_iter().map(|y| (y.name, y.z)).collect());
        if comps.len() == records.len() {
            let d = comps[0].quadratic_variation.len() as f64;
            let qv: Vec<f64> = comps
                .iter()
                .map(|c| c.quadratic_variation.iter().sum::<f64>() / (d * horizon))
                .collect();
            rep.quadratic_variation = Some(Estimate::from_replicas(&qv, "replica-mean"));
        }
    }
    if first.srbp.is_some() {
        let sums: Vec<_> = records.iter().filter_map(|r| r.srbp.as_ref()).collect();
        if rep.stationary {
            let d = sums[0].grad_start.len();
            let ks = (0..d)
                .map(|l| {
                    let a: Vec<f64> = sums.iter().map(|s| s.grad_start[l]).collect();
                    let b: Vec<f64> = sums.iter().map(|s| s.grad_end[l]).collect();
                    ks_two_sample(&a, &b)
                })
                .collect();
            rep.stationarity = optional(ks)?;
        }
        rep.orthogonality = optional(orthogonality_check(records))?.map(|o| o.corr_full);
    }
    Ok(rep)
}

/// A run too short or too small for an estimator leaves its field empty.
fn optional<T>(r: Result<T, CoreError>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CoreError::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn est(e: &Estimate) -> String {
    format!("{:.4} ± {:.4}", e.value, e.stderr)
}

pub fn to_markdown(rep: &Report) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("model".into(), rep.model.clone()),
        ("replicas".into(), rep.replicas.to_string()),
        ("horizon".into(), format!("{}", rep.horizon)),
        ("stationary start".into(), rep.stationary.to_string()),
        ("replicas flagged for wrap-around".into(), rep.wrap_around.to_string()),
    ];
    if let Some(d) = &rep.diffusivity {
        for (k, e) in d.iter().enumerate() {
            rows.push((format!("diffusivity, coordinate {}", k + 1), est(e)));
        }
    }
    if let Some(e) = &rep.trace_diffusivity {
        rows.push(("diffusivity, trace".into(), est(e)));
    }
    if let Some(e) = &rep.msd_exponent {
        rows.push(("exponent of E|X(t)|^2".into(), est(e)));
    }
    if let Some(ks) = &rep.stationarity {
        let ps: Vec<String> = ks.iter().map(|k| format!("{:.3}", k.p_value)).collect();
        rows.push(("stationarity KS p-value".into(), ps.join(", ")));
    }
    if let Some(f) = rep.lln_fraction {
        rows.push(("fraction with |X(T)|/T <= 3 sqrt(trace/T)".into(), format!("{f:.4}")));
    }
    if let Some(c) = &rep.orthogonality {
        let cs: Vec<String> = c.iter().map(|e| format!("{:.4}", e.value)).collect();
        rows.push(("corr(Brownian part, compensator)".into(), cs.join(", ")));
    }
    if let Some(r) = rep.decomposition_residual {
        rows.push(("max decomposition residual".into(), format!("{r:.2e}")));
    }
    if let Some(e) = &rep.quadratic_variation {
        rows.push(("quadratic variation rate".into(), est(e)));
    }
    if let Some(z) = &rep.yaglom_z {
        for (name, v) in z {
            rows.push((format!("time-reversal |z|, {name}"), format!("{v:.2}")));
        }
    }
    let mut out = String::from("| quantity | value |\n|---|---|\n");
    for (k, v) in rows {
        out.push_str(&format!("| {k} | {v} |\n"));
    }
    out
}
