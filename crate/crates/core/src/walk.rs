//! Event-driven simulation of the true self-avoiding walk on a torus.
//!
//! While the walker sits at `x`, only `ell(x)` grows (at unit rate), so the
//! rate towards `x + e` at delay `u` after arrival is `w(delta_e + u)` with
//! `delta_e = ell(x) - ell(x + e)` frozen at arrival. The waiting time is
//! drawn by inverting the closed-form cumulative hazard.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{sample_gibbs_lattice, sample_stationary_profile, FieldSample, GibbsSpec};
use crate::model::{JumpRate, RateFunction};
use crate::poly::{shift_in_place, Poly};
use crate::record::{derive_seed, CompensatorSummary, RunRecord, TsawSummary, SCHEMA_VERSION};
use crate::stats::{self, Estimate, KsResult};
use crate::torus::Torus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSampler {
    /// Exact inversion of the polynomial cumulative hazard.
    Inversion,
    /// Ogata thinning against a local majorant.
    Thinning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Local-time profile drawn from the invariant measure.
    Stationary,
    /// `ell = 0`; the environment process is then not stationary.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub d: usize,
    pub l: usize,
    pub horizon: f64,
    /// Spacing of the recorded time grid.
    pub record_dt: f64,
    pub init: InitMode,
    #[serde(default = "default_sampler")]
    pub sampler: EventSampler,
    /// Keep the per-sojourn event log (needed for compensators).
    #[serde(default)]
    pub keep_log: bool,
    /// Diagnostic mode: local time does not grow.
    #[serde(default)]
    pub frozen: bool,
}

fn default_sampler() -> EventSampler {
    EventSampler::Inversion
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if self.l < 3 {
            return Err(invalid("L", "must be at least 3"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be finite and non-negative"));
        }
        if !(self.record_dt > 0.0) {
            return Err(invalid("record_dt", "must be positive"));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Vec<f64> {
        time_grid(self.horizon, self.record_dt)
    }
}

/// `0, dt, 2 dt, ...` up to the horizon, which is always the last point.
pub fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt + 1e-9).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if horizon - t[n] > 1e-9 * dt {
        t.push(horizon);
    } else {
        t[n] = horizon;
    }
    t
}

/// One sojourn: the environment at arrival, its duration and how it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub wait: f64,
    /// `None` for the final sojourn cut by the horizon.
    pub dir: Option<u8>,
    /// `ell(x) - ell(x + e)` per direction at arrival.
    pub deltas: Vec<f64>,
    /// The jump belongs to the minorizing part (rate `floor` per direction).
    pub base: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledEvent {
    pub wait: f64,
    pub dir: usize,
    pub base: bool,
    pub total_rate_at_arrival: f64,
}

/// Walker on the torus together with its local-time field.
pub struct WalkerState<'a, R: JumpRate> {
    torus: &'a Torus,
    rate: &'a R,
    pub x: usize,
    pub disp: Vec<i64>,
    pub ell: Vec<f64>,
    pub t: f64,
    pub rng: ChaCha8Rng,
    pub log: Option<Vec<EventRecord>>,
    sampler: EventSampler,
    frozen: bool,
    deltas: Vec<f64>,
    hazard: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a, R: JumpRate> WalkerState<'a, R> {
    pub fn new(
        torus: &'a Torus,
        rate: &'a R,
        ell: Vec<f64>,
        seed: u64,
        sampler: EventSampler,
        keep_log: bool,
    ) -> Result<Self> {
        if ell.len() != torus.sites() {
            return Err(invalid("ell", "profile size does not match the torus"));
        }
        if !(rate.floor() > 0.0) {
            return Err(Error::NotElliptic {
                inf: rate.floor(),
                at: rate.floor_at(),
            });
        }
        if sampler == EventSampler::Inversion && rate.polynomial().is_none() {
            return Err(invalid("sampler", "inversion needs a polynomial rate"));
        }
        let nd = torus.directions();
        Ok(WalkerState {
            torus,
            rate,
            x: 0,
            disp: vec![0; torus.d()],
            ell,
            t: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            log: keep_log.then(Vec::new),
            sampler,
            frozen: false,
            deltas: vec![0.0; nd],
            hazard: Vec::new(),
            tmp: Vec::new(),
        })
    }

    /// Diagnostic mode: the local time stays frozen between jumps.
    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn torus(&self) -> &Torus {
        self.torus
    }

    /// `ell(x) - ell(x + e)` for every direction, at the current time.
    pub fn gradients(&self) -> Vec<f64> {
        (0..self.torus.directions())
            .map(|e| self.ell[self.x] - self.ell[self.torus.neighbor(self.x, e)])
            .collect()
    }

    fn load_deltas(&mut self) {
        let lx = self.ell[self.x];
        for e in 0..self.deltas.len() {
            self.deltas[e] = lx - self.ell[self.torus.neighbor(self.x, e)];
        }
    }

    /// Samples the waiting time and the direction of the next jump without
    /// changing the state.
    pub fn next_event(&mut self) -> Result<SampledEvent> {
        self.load_deltas();
        match self.sampler {
            EventSampler::Inversion => self.sample_inversion(),
            EventSampler::Thinning => self.sample_thinning(),
        }
    }

    fn total_rate(&self, u: f64) -> f64 {
        self.deltas.iter().map(|d| self.rate.rate(d + u)).sum()
    }

    fn pick_direction(&mut self, u: f64, total: f64) -> (usize, bool) {
        let target = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut dir = self.deltas.len() - 1;
        let mut chosen_rate = self.rate.rate(self.deltas[dir] + u);
        for e in 0..self.deltas.len() {
            let w = self.rate.rate(self.deltas[e] + u);
            acc += w;
            if target < acc {
                dir = e;
                chosen_rate = w;
                break;
            }
        }
        let base = self.rng.random::<f64>() * chosen_rate < self.rate.floor();
        (dir, base)
    }

    fn sample_inversion(&mut self) -> Result<SampledEvent> {
        let e_target = -(1.0 - self.rng.random::<f64>()).ln();
        let floor = self.rate.floor();
        let nd = self.deltas.len() as f64;
        let h0 = self.total_rate(0.0);
        if self.frozen {
            let wait = e_target / h0;
            let (dir, base) = self.pick_direction(0.0, h0);
            return Ok(SampledEvent {
                wait,
                dir,
                base,
                total_rate_at_arrival: h0,
            });
        }
        let w = self.rate.polynomial().expect("checked at construction");
        // hazard polynomial H(u) = sum_e w(delta_e + u)
        self.hazard.clear();
        self.hazard.resize(w.coeffs.len(), 0.0);
        for e in 0..self.deltas.len() {
            self.tmp.clear();
            self.tmp.extend_from_slice(&w.coeffs);
            shift_in_place(&mut self.tmp, self.deltas[e]);
            for (h, c) in self.hazard.iter_mut().zip(&self.tmp) {
                *h += c;
            }
        }
        let hazard = Poly {
            coeffs: self.hazard.clone(),
        };
        let cum = hazard.antiderivative();
        let wait = invert_increasing(&cum, &hazard, e_target, e_target / (nd * floor))?;
        let total = hazard.eval(wait);
        let (dir, base) = self.pick_direction(wait, total);
        Ok(SampledEvent {
            wait,
            dir,
            base,
            total_rate_at_arrival: h0,
        })
    }

    fn sample_thinning(&mut self) -> Result<SampledEvent> {
        let floor = self.rate.floor();
        let nd = self.deltas.len();
        let window = 0.5 / (nd as f64 * floor);
        let h0 = self.total_rate(0.0);
        let mut u = 0.0;
        for _ in 0..10_000_000 {
            let grow = if self.frozen { 0.0 } else { window };
            let mut bound = 0.0;
            for e in 0..nd {
                let a = self.deltas[e] + if self.frozen { 0.0 } else { u };
                bound += self.rate.sup_on(a, a + grow);
            }
            let s = -(1.0 - self.rng.random::<f64>()).ln() / bound;
            if s > window {
                u += window;
                continue;
            }
            u += s;
            let at = if self.frozen { 0.0 } else { u };
            let total = self.total_rate(at);
            if total > bound * (1.0 + 1e-12) {
                return Err(Error::RootFinding(format!(
                    "majorant {bound} below total rate {total}"
                )));
            }
            if self.rng.random::<f64>() * bound < total {
                let (dir, base) = self.pick_direction(at, total);
                return Ok(SampledEvent {
                    wait: u,
                    dir,
                    base,
                    total_rate_at_arrival: h0,
                });
            }
        }
        Err(Error::RootFinding("thinning did not produce an event".into()))
    }

    /// Lets `wait` elapse at the current site, then jumps along `dir`.
    pub fn advance(&mut self, wait: f64, dir: usize) {
        if !self.frozen {
            self.ell[self.x] += wait;
        }
        self.t += wait;
        self.x = self.torus.neighbor(self.x, dir);
        let (k, s) = Torus::step(dir);
        self.disp[k] += s;
    }

    /// Lets `wait` elapse without a jump.
    pub fn idle(&mut self, wait: f64) {
        if !self.frozen {
            self.ell[self.x] += wait;
        }
        self.t += wait;
    }
}

/// Solves `cum(t) = target` for increasing `cum` with derivative `rate > 0`
/// on `[0, hi]` by Newton steps safeguarded with bisection.
fn invert_increasing(cum: &Poly, rate: &Poly, target: f64, hi: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = hi;
    if !(hi.is_finite() && hi > 0.0) {
        return Err(Error::RootFinding(format!("invalid bracket [0, {hi}]")));
    }
    let f_hi = cum.eval(hi) - target;
    if f_hi < 0.0 {
        if f_hi > -1e-12 * target.max(1.0) {
            return Ok(hi);
        }
        return Err(Error::RootFinding(format!(
            "cumulative hazard below target at the bracket end ({f_hi})"
        )));
    }
    let mut t = (target / rate.eval(0.0)).clamp(0.0, hi);
    for _ in 0..200 {
        let f = cum.eval(t) - target;
        if f == 0.0 {
            return Ok(t);
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let df = rate.eval(t);
        let mut next = t - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-12 * t.max(1e-12) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::RootFinding("hazard inversion did not converge".into()))
}

/// Initial profile drawn from the invariant measure of the environment
/// process: the Gibbs measure at coupling 2. For linear `r` this is the
/// Gaussian field with covariance `(1/2)(-Delta)^{-1}`, sampled exactly by
/// FFT; otherwise a Metropolis chain with the default burn-in.
pub fn stationary_profile(rf: &RateFunction, d: usize, l: usize, seed: u64) -> Result<FieldSample> {
    if rf.r_is_linear() {
        sample_stationary_profile(d, l, seed)
    } else {
        let spec = GibbsSpec::new(rf, 2.0, 0.5)?;
        sample_gibbs_lattice(d, l, &spec, None, seed)
    }
}

/// Simulates one trajectory to the horizon. `profile` is the initial local
/// time (`None` for the empty start).
pub fn run_trajectory<R: JumpRate>(
    cfg: &WalkConfig,
    rate: &R,
    rate_desc: serde_json::Value,
    profile: Option<&FieldSample>,
    seed: u64,
    replica: u64,
) -> Result<(RunRecord, Option<Vec<EventRecord>>)> {
    cfg.validate()?;
    let torus = Torus::new(cfg.d, cfg.l)?;
    let ell = match profile {
        Some(f) => {
            if f.d != cfg.d || f.l != cfg.l {
                return Err(invalid("profile", "field geometry does not match the walk"));
            }
            f.values.clone()
        }
        None => vec![0.0; torus.sites()],
    };
    let ell0_sum: f64 = ell.iter().sum();
    // the walk consumes its own stream; the profile seed is recorded apart
    let mut st = WalkerState::new(&torus, rate, ell, seed, cfg.sampler, cfg.keep_log)?;
    st.set_frozen(cfg.frozen);
    let nd = torus.directions();
    let times = cfg.time_grid();
    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    let env_start = st.gradients();
    let mut counts = vec![0u64; nd];
    let mut m1 = 0.0;
    let mut m3 = 0.0;
    let mut min_rate = f64::INFINITY;
    let mut max_dist2: i64 = 0;
    let mut next_rec = 0usize;
    let horizon = cfg.horizon;
    let mut n_events = 0u64;

    let moments = |deltas: &[f64], tau: f64, m1: &mut f64, m3: &mut f64| {
        for &d in deltas {
            let b = d + tau;
            *m1 += 0.5 * (b * b - d * d);
            *m3 += 0.25 * (b.powi(4) - d.powi(4));
        }
    };

    while horizon > 0.0 {
        let ev = st.next_event()?;
        min_rate = min_rate.min(ev.total_rate_at_arrival);
        let remaining = horizon - st.t;
        let cut = ev.wait >= remaining;
        let wait = if cut { remaining } else { ev.wait };
        let growth = if cfg.frozen { 0.0 } else { wait };
        moments(&st.deltas, growth, &mut m1, &mut m3);
        if let Some(log) = st.log.as_mut() {
            log.push(EventRecord {
                wait,
                dir: if cut { None } else { Some(ev.dir as u8) },
                deltas: st.deltas.clone(),
                base: !cut && ev.base,
            });
        }
        let t_next = st.t + wait;
        while !cut && next_rec < times.len() && times[next_rec] < t_next {
            positions.push(st.disp.iter().map(|v| *v as f64).collect());
            next_rec += 1;
        }
        if cut {
            st.idle(wait);
            st.t = horizon;
            break;
        }
        st.advance(wait, ev.dir);
        counts[ev.dir] += 1;
        n_events += 1;
        max_dist2 = max_dist2.max(st.disp.iter().map(|v| v * v).sum());
    }
    while positions.len() < times.len() {
        positions.push(st.disp.iter().map(|v| *v as f64).collect());
    }
    let env_end = st.gradients();
    let span = if horizon > 0.0 { horizon * nd as f64 } else { 1.0 };
    let log = st.log.take();
    let gain = st.ell.iter().sum::<f64>() - ell0_sum;
    let summary = TsawSummary {
        n_events,
        jump_counts: counts,
        env_start,
        env_end,
        mean_gradient: m1 / span,
        mean_gradient_cubed: m3 / span,
        min_total_rate: min_rate,
        local_time_gain: gain,
        compensators: None,
    };
    let config = serde_json::json!({ "walk": cfg, "rate": rate_desc, "profile_seed": profile.map(|f| f.seed) });
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        model: "tsaw".into(),
        config,
        seed,
        replica,
        stationary: profile.is_some() && cfg.init == InitMode::Stationary,
        wrap_around: (max_dist2 as f64).sqrt() >= cfg.l as f64 / 4.0,
        times,
        positions,
        tsaw: Some(summary),
        srbp: None,
        estimators: Default::default(),
    };
    Ok((record, log))
}

/// One replica: the stationary profile (if any) is drawn from
/// `derive_seed(seed, 0)`, the walk from `derive_seed(seed, 1)`. With
/// `keep_log` the compensators are filled in and the log dropped.
pub fn simulate_tsaw(cfg: &WalkConfig, rf: &RateFunction, seed: u64, replica: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let profile = match cfg.init {
        InitMode::Stationary => Some(stationary_profile(rf, cfg.d, cfg.l, derive_seed(seed, 0))?),
        InitMode::Empty => None,
    };
    let desc = serde_json::to_value(rf.params())?;
    let (mut rec, log) = run_trajectory(cfg, rf, desc, profile.as_ref(), derive_seed(seed, 1), replica)?;
    if let Some(log) = log {
        let comp = compensator_decomposition(&rec, Some(&log), rf)?;
        if let Some(s) = rec.tsaw.as_mut() {
            s.compensators = Some(comp);
        }
    }
    Ok(rec)
}

/// Martingale and compensator parts of the displacement, integrated in
/// closed form sojourn by sojourn.
pub fn compensator_decomposition(
    record: &RunRecord,
    log: Option<&[EventRecord]>,
    rf: &RateFunction,
) -> Result<CompensatorSummary> {
    let log = log.ok_or_else(|| invalid("log", "compensators need the event log"))?;
    let d = record.final_position().len();
    let s_int = rf.s().antiderivative();
    let r_int = rf.r().antiderivative();
    let w_int = rf.w().antiderivative();
    let span = |p: &Poly, a: f64, tau: f64| p.eval(a + tau) - p.eval(a);
    let mut bar = vec![0.0; d];
    let mut tilde = vec![0.0; d];
    let mut qv = vec![0.0; d];
    let mut base_disp = vec![0.0; d];
    let mut other_disp = vec![0.0; d];
    for ev in log {
        for l in 0..d {
            let (dp, dm) = (ev.deltas[2 * l], ev.deltas[2 * l + 1]);
            bar[l] += span(&s_int, dp, ev.wait) - span(&s_int, dm, ev.wait);
            tilde[l] += span(&r_int, dp, ev.wait) - span(&r_int, dm, ev.wait);
            qv[l] += span(&w_int, dp, ev.wait) + span(&w_int, dm, ev.wait);
        }
        if let Some(dir) = ev.dir {
            let (k, s) = Torus::step(dir as usize);
            if ev.base {
                base_disp[k] += s as f64;
            } else {
                other_disp[k] += s as f64;
            }
        }
    }
    let x = record.final_position();
    let x0 = &record.positions[0];
    let m: Vec<f64> = (0..d).map(|l| other_disp[l] - bar[l] - tilde[l]).collect();
    let residual = (0..d)
        .map(|l| (x[l] - x0[l] - bar[l] - tilde[l] - base_disp[l] - m[l]).abs())
        .fold(0.0, f64::max);
    Ok(CompensatorSummary {
        bar_integral: bar,
        tilde_integral: tilde,
        n_mart: base_disp,
        m_mart: m,
        quadratic_variation: qv,
        residual,
    })
}

/// Two-sample KS between `eta(0,0) - eta(0,e_1)` and `eta(T,0) - eta(T,e_1)`
/// across replicas.
pub fn stationarity_ks(records: &[RunRecord]) -> Result<KsResult> {
    let mut a = Vec::with_capacity(records.len());
    let mut b = Vec::with_capacity(records.len());
    for r in records {
        let s = r.tsaw.as_ref().ok_or_else(|| invalid("records", "not a walk record"))?;
        a.push(s.env_start[0]);
        b.push(s.env_end[0]);
    }
    if a == b {
        return Ok(KsResult {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    stats::ks_two_sample(&a, &b)
}

/// `|X(T)| / T`
pub fn lln_check(record: &RunRecord) -> f64 {
    let t = *record.times.last().unwrap_or(&0.0);
    if t == 0.0 {
        return 0.0;
    }
    record.final_position().iter().map(|v| v * v).sum::<f64>().sqrt() / t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YaglomStatistic {
    pub name: String,
    pub forward: Estimate,
    pub reversed: Estimate,
    /// `|forward - reversed|` in units of its standard error.
    pub z: f64,
}

/// Compares odd path statistics with their values on the flipped,
/// time-reversed path `-eta(-t)`: the time-averaged gradient and its cube
/// change sign, and a jump along `e` becomes a jump along `-e`.
pub fn yaglom_check(records: &[RunRecord]) -> Result<Vec<YaglomStatistic>> {
    let mut g1 = Vec::new();
    let mut g3 = Vec::new();
    let mut asym = Vec::new();
    for r in records {
        let s = r.tsaw.as_ref().ok_or_else(|| invalid("records", "not a walk record"))?;
        g1.push(s.mean_gradient);
        g3.push(s.mean_gradient_cubed);
        let t = r.times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let d = s.jump_counts.len() / 2;
        let a: f64 = (0..d)
            .map(|k| s.jump_counts[2 * k] as f64 - s.jump_counts[2 * k + 1] as f64)
            .sum::<f64>()
            / (d as f64 * t);
        asym.push(a);
    }
    if records.len() < 2 {
        return Err(Error::InsufficientData("need replicas".into()));
    }
    let mk = |name: &str, xs: &[f64]| {
        let fwd = Estimate::from_replicas(xs, "replica-mean");
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        let rev = Estimate::from_replicas(&neg, "replica-mean");
        let diff: Vec<f64> = xs.iter().map(|v| 2.0 * v).collect();
        let de = Estimate::from_replicas(&diff, "replica-mean");
        let z = if de.stderr > 0.0 { de.value.abs() / de.stderr } else { 0.0 };
        YaglomStatistic {
            name: name.into(),
            forward: fwd,
            reversed: rev,
            z,
        }
    };
    Ok(vec![
        mk("mean_gradient", &g1),
        mk("mean_gradient_cubed", &g3),
        mk("jump_asymmetry", &asym),
    ])
}
