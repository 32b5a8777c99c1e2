//! Run records, seed derivation and atomic file output.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::stats::Estimate;

pub const SCHEMA_VERSION: u32 = 1;

/// Seed of replica `index` under `master`: two rounds of splitmix64 on a
/// counter, so replicas are independent of the order in which they run.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Summary statistics of one walk trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsawSummary {
    pub n_events: u64,
    /// Jump counts per direction (`2k` is `+e_k`, `2k + 1` is `-e_k`).
    pub jump_counts: Vec<u64>,
    /// `eta(t, 0) - eta(t, e)` per direction at time 0 and at the horizon.
    pub env_start: Vec<f64>,
    pub env_end: Vec<f64>,
    /// Time averages of `eta(t, 0) - eta(t, e)` and of its cube, averaged
    /// over directions.
    pub mean_gradient: f64,
    pub mean_gradient_cubed: f64,
    /// Smallest total jump rate met at an arrival.
    pub min_total_rate: f64,
    /// Sum of local times at the horizon minus at time 0.
    pub local_time_gain: f64,
    pub compensators: Option<CompensatorSummary>,
}

/// Integrated drift terms and martingale parts per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensatorSummary {
    pub bar_integral: Vec<f64>,
    pub tilde_integral: Vec<f64>,
    pub n_mart: Vec<f64>,
    pub m_mart: Vec<f64>,
    /// Predictable quadratic variation `int w(eta(0)-eta(e_l)) + w(eta(0)-eta(-e_l))`.
    pub quadratic_variation: Vec<f64>,
    /// Largest coordinate residual of `X - X0 - bar - tilde - N - M`.
    pub residual: f64,
}

/// Summary statistics of one polymer trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrbpSummary {
    pub steps: u64,
    /// Brownian displacement `B(t)` and `int_0^t phi` at the midpoint and the
    /// horizon.
    pub t_mid: f64,
    pub brownian_mid: Vec<f64>,
    pub brownian_end: Vec<f64>,
    pub compensator_mid: Vec<f64>,
    pub compensator_end: Vec<f64>,
    /// Gradient of the environment at the particle, `-drift`, at time 0 and
    /// at the horizon.
    pub grad_start: Vec<f64>,
    pub grad_end: Vec<f64>,
}

/// The unit of persistence: everything needed to rerun a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub model: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub replica: u64,
    /// Initial environment was drawn from the invariant measure.
    pub stationary: bool,
    pub wrap_around: bool,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub tsaw: Option<TsawSummary>,
    pub srbp: Option<SrbpSummary>,
    #[serde(default)]
    pub estimators: BTreeMap<String, Estimate>,
}

impl RunRecord {
    pub fn final_position(&self) -> &[f64] {
        self.positions.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Time series as CSV with header `t,x1,...,xd`.
    pub fn to_csv(&self) -> String {
        let d = self.positions.first().map_or(0, |p| p.len());
        let mut out = String::from("t");
        for k in 1..=d {
            out.push_str(&format!(",x{k}"));
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.positions) {
            out.push_str(&t.to_string());
            for v in x {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Writes through a sibling temporary file and renames, so a partially
/// written artifact never appears under its final name.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.partial"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
