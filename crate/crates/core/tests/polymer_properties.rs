//! Drift oracles and small statistical checks for the polymer integrator.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfrepel_core::model::Potential;
use selfrepel_core::polymer::*;
use selfrepel_core::presets::srbp_gauss_d3;
use selfrepel_core::stats::msd_diffusivity;

fn state(dt: f64) -> PolymerState<'static> {
    PolymerState::new(srbp_gauss_d3(), dt, None, 1).unwrap()
}

fn empty_cfg(horizon: f64, dt: f64) -> PolymerConfig {
    PolymerConfig {
        potential: srbp_gauss_d3(),
        dt,
        horizon,
        record_dt: 0.1,
        init: PolymerInit::Empty,
        box_len: 16.0,
        grid: 32,
        no_interaction: false,
    }
}

#[test]
fn empty_past_has_zero_drift() {
    let st = state(0.01);
    assert_eq!(st.drift(), vec![0.0; 3]);
}

#[test]
fn single_past_point_contribution() {
    let mut st = state(0.01);
    let z = [0.3, -0.2, 0.5];
    st.push_past(&[-z[0], -z[1], -z[2]]);
    let drift = st.drift();
    let r2: f64 = z.iter().map(|v| v * v).sum();
    for a in 0..3 {
        let want = 0.01 * 2.0 * z[a] * (-r2).exp();
        assert!((drift[a] - want).abs() < 1e-15);
    }
}

#[test]
fn cell_list_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..1000 {
        let mut st = state(0.01);
        let n = 1 + k % 200;
        let spread = 1.0 + (k % 7) as f64 * 3.0;
        for _ in 0..n {
            let p: Vec<f64> = (0..3).map(|_| spread * (rng.random::<f64>() - 0.5)).collect();
            st.push_past(&p);
        }
        st.x = (0..3).map(|_| spread * (rng.random::<f64>() - 0.5)).collect();
        let a = st.drift();
        let b = st.drift_brute();
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-10, "config {k}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn mirrored_past_negates_drift() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..3).map(|_| 2.0 * (rng.random::<f64>() - 0.5)).collect())
        .collect();
    let mut a = state(0.01);
    let mut b = state(0.01);
    for p in &pts {
        a.push_past(p);
        b.push_past(&p.iter().map(|v| -v).collect::<Vec<_>>());
    }
    let (da, db) = (a.drift(), b.drift());
    for i in 0..3 {
        assert!((da[i] + db[i]).abs() < 1e-14);
    }
    // a past symmetric about the particle exerts no force
    let mut c = state(0.01);
    for p in &pts {
        c.push_past(p);
        c.push_past(&p.iter().map(|v| -v).collect::<Vec<_>>());
    }
    assert!(c.drift().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn drift_descends_the_occupation_energy() {
    // noise-off step along the drift lowers sum_k dt V(x - X_k) for the
    // fixed past
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut st = state(0.01);
        for _ in 0..100 {
            let p: Vec<f64> = (0..3).map(|_| 3.0 * (rng.random::<f64>() - 0.5)).collect();
            st.push_past(&p);
        }
        st.x = (0..3).map(|_| 3.0 * (rng.random::<f64>() - 0.5)).collect();
        let drift = st.drift();
        let h = 1e-3;
        let next: Vec<f64> = st.x.iter().zip(&drift).map(|(x, f)| x + h * f).collect();
        assert!(st.energy_at(&next) <= st.energy_at(&st.x) + 1e-15);
    }
}

#[test]
fn free_motion_is_brownian() {
    let mut cfg = empty_cfg(5.0, 0.01);
    cfg.no_interaction = true;
    let recs: Vec<_> = (0..400).map(|r| simulate_polymer(&cfg, 100 + r, r).unwrap()).collect();
    let paths: Vec<_> = recs.iter().map(|r| r.positions.clone()).collect();
    let est = msd_diffusivity(&paths, &recs[0].times, 0.1).unwrap();
    assert!((est.trace.value - 3.0).abs() < 3.0 * est.trace.stderr, "{:?}", est.trace);
    for e in &est.per_coord {
        assert!((e.value - 1.0).abs() < 3.0 * e.stderr);
    }
    // without a field nor interaction the compensator vanishes
    assert!(recs.iter().all(|r| r.srbp.as_ref().unwrap().compensator_end == vec![0.0; 3]));
}

#[test]
fn dt_halving_is_within_noise() {
    let mean_sq = |dt: f64| {
        let cfg = empty_cfg(4.0, dt);
        let xs: Vec<f64> = (0..300)
            .map(|r| {
                let rec = simulate_polymer(&cfg, 7_000 + r, r).unwrap();
                rec.final_position()[0].powi(2) / 4.0
            })
            .collect();
        selfrepel_core::stats::Estimate::from_replicas(&xs, "replica-mean")
    };
    let a = mean_sq(0.01);
    let b = mean_sq(0.005);
    assert!(a.z_against(&b) < 3.0, "{a:?} vs {b:?}");
}

#[test]
fn configuration_is_validated() {
    let mut cfg = empty_cfg(1.0, 0.02);
    assert!(cfg.validate().is_err());
    cfg.dt = 0.01;
    cfg.potential = Potential::gaussian(1.0, 1.0, 4).unwrap();
    assert!(cfg.validate().is_err());
    cfg.potential = srbp_gauss_d3();
    cfg.init = PolymerInit::Stationary;
    assert!(run_polymer(&cfg, None, 0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn polymer_runs_are_reproducible(seed in 0u64..1_000_000) {
        let cfg = empty_cfg(0.5, 0.01);
        let a = serde_json::to_vec(&simulate_polymer(&cfg, seed, 0).unwrap()).unwrap();
        let b = serde_json::to_vec(&simulate_polymer(&cfg, seed, 0).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn drift_is_finite_and_bounded(seed in 0u64..1_000_000) {
        let cfg = empty_cfg(1.0, 0.01);
        let rec = simulate_polymer(&cfg, seed, 0).unwrap();
        // after time t the past pushes with at most t |F|_max, |F|_max = sqrt(2/e),
        // so the accumulated drift is below |F|_max T^2 / 2
        let s = rec.srbp.unwrap();
        let bound = 0.5 * (2.0f64 / std::f64::consts::E).sqrt();
        for c in &s.compensator_end {
            prop_assert!(c.is_finite() && c.abs() <= bound);
        }
    }
}
