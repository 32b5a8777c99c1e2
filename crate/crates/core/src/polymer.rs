//! Euler-Maruyama simulation of the self-repelling Brownian polymer
//!
//! `dX = -grad eta_0(X) dt + (int_0^t F(X(t) - X(u)) du) dt + dB`,
//!
//! with the occupation integral replaced by the left Riemann sum over past
//! step positions and the initial field `eta_0` interpolated from a spectral
//! sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::field::{sample_continuum_field, ContinuumField};
use crate::model::Potential;
use crate::record::{derive_seed, RunRecord, SrbpSummary, SCHEMA_VERSION};
use crate::stats::{self, Estimate};

/// Pair interactions below this size are dropped.
pub const PAIR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolymerInit {
    /// Initial field drawn from the stationary Gaussian measure.
    Stationary,
    /// `eta_0 = 0`; not stationary.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerConfig {
    pub potential: Potential,
    pub dt: f64,
    pub horizon: f64,
    pub record_dt: f64,
    pub init: PolymerInit,
    /// Side of the periodic box carrying the initial field.
    pub box_len: f64,
    /// Grid nodes per axis of the initial field.
    pub grid: usize,
    /// Switch off the self-interaction (`V = 0` dynamics with the same
    /// initial field).
    #[serde(default)]
    pub no_interaction: bool,
}

impl PolymerConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.potential.d;
        if d == 0 || d > 3 {
            return Err(Error::Unsupported("polymer simulation supports 1 <= d <= 3".into()));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.dt > 1e-2 * self.potential.width * (1.0 + 1e-12) {
            return Err(invalid("dt", "must not exceed 1e-2 times the potential width"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be finite and non-negative"));
        }
        if !(self.record_dt >= self.dt) {
            return Err(invalid("record_dt", "must be at least dt"));
        }
        Ok(())
    }
}

type Key = [i64; 3];

/// Past positions bucketed into cubic cells of side `R_cut`.
#[derive(Debug, Clone)]
pub struct CellList {
    d: usize,
    cell: f64,
    map: HashMap<Key, Vec<[f64; 3]>>,
    len: usize,
}

impl CellList {
    pub fn new(d: usize, cell: f64) -> Self {
        CellList {
            d,
            cell,
            map: HashMap::new(),
            len: 0,
        }
    }

    fn key(&self, x: &[f64]) -> Key {
        let mut k = [0i64; 3];
        for a in 0..self.d {
            k[a] = (x[a] / self.cell).floor() as i64;
        }
        k
    }

    pub fn push(&mut self, x: &[f64]) {
        let mut p = [0.0; 3];
        p[..self.d].copy_from_slice(&x[..self.d]);
        let k = self.key(x);
        self.map.entry(k).or_default().push(p);
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Calls `f` on every stored point in the cells adjacent to `x`.
    pub fn for_each_near(&self, x: &[f64], mut f: impl FnMut(&[f64; 3])) {
        let k = self.key(x);
        let span = |a: usize| if a < self.d { -1..=1 } else { 0..=0 };
        for i in span(0) {
            for j in span(1) {
                for l in span(2) {
                    if let Some(pts) = self.map.get(&[k[0] + i, k[1] + j, k[2] + l]) {
                        pts.iter().for_each(&mut f);
                    }
                }
            }
        }
    }

    pub fn for_each(&self, mut f: impl FnMut(&[f64; 3])) {
        for pts in self.map.values() {
            pts.iter().for_each(&mut f);
        }
    }
}

pub struct PolymerState<'a> {
    pub d: usize,
    pub x: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    potential: Potential,
    r_cut: f64,
    past: CellList,
    field: Option<&'a ContinuumField>,
    /// Position of the particle's starting point in field coordinates.
    offset: Vec<f64>,
    interacting: bool,
    pub rng: ChaCha8Rng,
    /// `B(t)`
    pub brownian: Vec<f64>,
    /// `int_0^t phi(eta(u)) du`, i.e. the accumulated drift.
    pub compensator: Vec<f64>,
}

impl<'a> PolymerState<'a> {
    pub fn new(
        potential: Potential,
        dt: f64,
        field: Option<&'a ContinuumField>,
        seed: u64,
    ) -> Result<Self> {
        let d = potential.d;
        if d == 0 || d > 3 {
            return Err(Error::Unsupported("polymer simulation supports 1 <= d <= 3".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = match field {
            Some(f) => {
                if f.sample.d != d {
                    return Err(invalid("field", "dimension mismatch"));
                }
                (0..d).map(|_| rng.random::<f64>() * f.box_len).collect()
            }
            None => vec![0.0; d],
        };
        let r_cut = potential.cutoff_radius(PAIR_TOLERANCE).max(1e-9);
        Ok(PolymerState {
            d,
            x: vec![0.0; d],
            t: 0.0,
            dt,
            potential,
            r_cut,
            past: CellList::new(d, r_cut),
            field,
            offset,
            interacting: true,
            rng,
            brownian: vec![0.0; d],
            compensator: vec![0.0; d],
        })
    }

    pub fn set_interacting(&mut self, on: bool) {
        self.interacting = on;
    }

    /// Appends a past position (used to build test configurations).
    pub fn push_past(&mut self, x: &[f64]) {
        self.past.push(x);
    }

    pub fn past_len(&self) -> usize {
        self.past.len()
    }

    pub fn cutoff(&self) -> f64 {
        self.r_cut
    }

    fn field_grad(&self, x: &[f64]) -> Vec<f64> {
        match self.field {
            Some(f) => {
                let y: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a + b).collect();
                f.grad_at(&y)
            }
            None => vec![0.0; self.d],
        }
    }

    /// `eta_0(X)` in the particle's frame (zero without a field).
    pub fn field_value(&self, x: &[f64]) -> f64 {
        match self.field {
            Some(f) => {
                let y: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a + b).collect();
                f.value_at(&y)
            }
            None => 0.0,
        }
    }

    fn pair_force(&self, x: &[f64], p: &[f64; 3], out: &mut [f64], cutoff: bool) {
        let mut r2 = 0.0;
        for a in 0..self.d {
            let z = x[a] - p[a];
            r2 += z * z;
        }
        if cutoff && r2 >= self.r_cut * self.r_cut {
            return;
        }
        let s2 = self.potential.width * self.potential.width;
        // F(z) = (2 z / sigma^2) V(z)
        let k = self.dt * 2.0 * self.potential.eval_r2(r2) / s2;
        for a in 0..self.d {
            out[a] += k * (x[a] - p[a]);
        }
    }

    /// `-grad eta_0(X) + sum_k dt F(X - X_k)` over past samples within the
    /// cutoff radius, found through the cell list.
    pub fn drift(&self) -> Vec<f64> {
        self.drift_at(&self.x)
    }

    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.field_grad(x).iter().map(|g| -g).collect();
        if self.interacting {
            self.past.for_each_near(x, |p| self.pair_force(x, p, &mut out, true));
        }
        out
    }

    /// Same sum over every past sample without cutoff.
    pub fn drift_brute(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.field_grad(&self.x).iter().map(|g| -g).collect();
        if self.interacting {
            self.past.for_each(|p| self.pair_force(&self.x, p, &mut out, false));
        }
        out
    }

    /// `sum_k dt V(x - X_k) + eta_0(x)`: the potential whose negative
    /// gradient is the drift at `x` for the current past.
    pub fn energy_at(&self, x: &[f64]) -> f64 {
        let mut e = self.field_value(x);
        self.past.for_each(|p| {
            let r2: f64 = (0..self.d).map(|a| (x[a] - p[a]).powi(2)).sum();
            e += self.dt * self.potential.eval_r2(r2);
        });
        e
    }

    /// One Euler-Maruyama step.
    pub fn em_step(&mut self) {
        let drift = self.drift();
        let sq = self.dt.sqrt();
        let x_old = self.x.clone();
        for a in 0..self.d {
            let xi: f64 = self.rng.sample(StandardNormal);
            let db = sq * xi;
            self.x[a] += drift[a] * self.dt + db;
            self.brownian[a] += db;
            self.compensator[a] += drift[a] * self.dt;
        }
        self.past.push(&x_old);
        self.t += self.dt;
    }
}

/// Simulates one polymer trajectory; the initial field (if any) is passed
/// in so callers can share or inspect it.
pub fn run_polymer(
    cfg: &PolymerConfig,
    field: Option<&ContinuumField>,
    seed: u64,
    replica: u64,
) -> Result<RunRecord> {
    cfg.validate()?;
    if cfg.init == PolymerInit::Stationary && field.is_none() {
        return Err(invalid("field", "stationary start needs an initial field"));
    }
    let mut st = PolymerState::new(cfg.potential, cfg.dt, field, seed)?;
    st.set_interacting(!cfg.no_interaction);
    let steps = (cfg.horizon / cfg.dt).round() as u64;
    let rec_every = ((cfg.record_dt / cfg.dt).round() as u64).max(1);
    let mid = steps / 2;
    let mut times = vec![0.0];
    let mut positions = vec![st.x.clone()];
    let grad_start: Vec<f64> = st.drift().iter().map(|v| -v).collect();
    let mut brownian_mid = vec![0.0; st.d];
    let mut compensator_mid = vec![0.0; st.d];
    let mut max_r2: f64 = 0.0;
    for k in 1..=steps {
        st.em_step();
        if k == mid {
            brownian_mid = st.brownian.clone();
            compensator_mid = st.compensator.clone();
        }
        if k % rec_every == 0 || k == steps {
            times.push(k as f64 * cfg.dt);
            positions.push(st.x.clone());
        }
        max_r2 = max_r2.max(st.x.iter().map(|v| v * v).sum());
    }
    let grad_end: Vec<f64> = st.drift().iter().map(|v| -v).collect();
    let summary = SrbpSummary {
        steps,
        t_mid: mid as f64 * cfg.dt,
        brownian_mid,
        brownian_end: st.brownian.clone(),
        compensator_mid,
        compensator_end: st.compensator.clone(),
        grad_start,
        grad_end,
    };
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        model: "srbp".into(),
        config: serde_json::json!({ "polymer": cfg }),
        seed,
        replica,
        stationary: cfg.init == PolymerInit::Stationary,
        wrap_around: field.is_some() && max_r2.sqrt() >= cfg.box_len / 2.0,
        times,
        positions,
        tsaw: None,
        srbp: Some(summary),
        estimators: Default::default(),
    })
}

/// Samples the initial field from `derive_seed(seed, 0)` (when stationary)
/// and runs the dynamics on `derive_seed(seed, 1)`.
pub fn simulate_polymer(cfg: &PolymerConfig, seed: u64, replica: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let field = match cfg.init {
        PolymerInit::Stationary => Some(sample_continuum_field(
            cfg.potential.d,
            cfg.box_len,
            cfg.grid,
            &cfg.potential,
            derive_seed(seed, 0),
        )?),
        PolymerInit::Empty => None,
    };
    run_polymer(cfg, field.as_ref(), derive_seed(seed, 1), replica)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// `corr(B(T) - B(s), int_s^T phi)` per coordinate, for `s = 0` and
    /// `s = T/2`.
    pub corr_full: Vec<Estimate>,
    pub corr_second_half: Vec<Estimate>,
    /// Per coordinate: `E (X(T) - X(0))^2`, `T`, `E (int phi)^2` and the
    /// cross term `2 E[B int phi]`, which add up when the parts are
    /// uncorrelated.
    pub msd: Vec<Estimate>,
    pub brownian_var: Vec<Estimate>,
    pub compensator_var: Vec<Estimate>,
    pub cross: Vec<Estimate>,
    /// `E (X(T) - X(0))^2 - T` per coordinate.
    pub excess: Vec<Estimate>,
}

pub fn orthogonality_check(records: &[RunRecord]) -> Result<OrthogonalityReport> {
    let sums: Vec<&SrbpSummary> = records
        .iter()
        .map(|r| r.srbp.as_ref().ok_or_else(|| invalid("records", "not a polymer record")))
        .collect::<Result<_>>()?;
    if sums.len() < 3 {
        return Err(Error::InsufficientData("need at least three replicas".into()));
    }
    let d = sums[0].brownian_end.len();
    let mut corr_full = Vec::new();
    let mut corr_half = Vec::new();
    let mut msd = Vec::new();
    let mut bvar = Vec::new();
    let mut cvar = Vec::new();
    let mut cross = Vec::new();
    let mut excess = Vec::new();
    for l in 0..d {
        let b: Vec<f64> = sums.iter().map(|s| s.brownian_end[l]).collect();
        let c: Vec<f64> = sums.iter().map(|s| s.compensator_end[l]).collect();
        let b2: Vec<f64> = sums.iter().map(|s| s.brownian_end[l] - s.brownian_mid[l]).collect();
        let c2: Vec<f64> = sums
            .iter()
            .map(|s| s.compensator_end[l] - s.compensator_mid[l])
            .collect();
        corr_full.push(stats::correlation(&b, &c)?);
        corr_half.push(stats::correlation(&b2, &c2)?);
        let t_end = records[0].times.last().copied().unwrap_or(0.0);
        let x2: Vec<f64> = b.iter().zip(&c).map(|(u, v)| (u + v).powi(2)).collect();
        msd.push(Estimate::from_replicas(&x2, "replica-mean"));
        bvar.push(Estimate::from_replicas(&b.iter().map(|v| v * v).collect::<Vec<_>>(), "replica-mean"));
        cvar.push(Estimate::from_replicas(&c.iter().map(|v| v * v).collect::<Vec<_>>(), "replica-mean"));
        cross.push(Estimate::from_replicas(
            &b.iter().zip(&c).map(|(u, v)| 2.0 * u * v).collect::<Vec<_>>(),
            "replica-mean",
        ));
        let ex: Vec<f64> = x2.iter().map(|v| v - t_end).collect();
        excess.push(Estimate::from_replicas(&ex, "replica-mean"));
    }
    Ok(OrthogonalityReport {
        corr_full,
        corr_second_half: corr_half,
        msd,
        brownian_var: bvar,
        compensator_var: cvar,
        cross,
        excess,
    })
}
