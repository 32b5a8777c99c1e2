//! Calibration of the shared estimators.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use selfrepel_core::presets::simple_walk;
use selfrepel_core::stats::*;
use selfrepel_core::walk::{run_trajectory, EventSampler, InitMode, WalkConfig};

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn ks_p_values_are_calibrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 1000;
    let rejections = (0..trials)
        .filter(|_| {
            let a = normals(&mut rng, 1000);
            let b = normals(&mut rng, 1000);
            ks_two_sample(&a, &b).unwrap().p_value < 0.05
        })
        .count();
    let frac = rejections as f64 / trials as f64;
    assert!((0.03..=0.07).contains(&frac), "{frac}");
}

#[test]
fn batch_means_coverage_on_ar1() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (phi, mu, n) = (0.6, 1.5, 8192);
    let trials = 1000;
    let mut covered = 0;
    for _ in 0..trials {
        let mut x = mu + gauss(&mut rng) / (1.0f64 - phi * phi).sqrt();
        let series: Vec<f64> = (0..n)
            .map(|_| {
                x = mu + phi * (x - mu) + gauss(&mut rng);
                x
            })
            .collect();
        let e = batch_means_ci(&series).unwrap();
        let (lo, hi) = confidence_interval(&e, 0.95);
        if lo <= mu && mu <= hi {
            covered += 1;
        }
    }
    let frac = covered as f64 / trials as f64;
    assert!((0.93..=0.97).contains(&frac), "{frac}");
}

#[test]
fn simple_walk_trace_slope_is_six() {
    let rf = simple_walk(1.0).unwrap();
    let cfg = WalkConfig {
        d: 3,
        l: 64,
        horizon: 40.0,
        record_dt: 1.0,
        init: InitMode::Empty,
        sampler: EventSampler::Inversion,
        keep_log: false,
        frozen: false,
    };
    let recs: Vec<_> = (0..300)
        .map(|r| run_trajectory(&cfg, &rf, serde_json::Value::Null, None, 1000 + r, r).unwrap().0)
        .collect();
    let paths: Vec<_> = recs.iter().map(|r| r.positions.clone()).collect();
    let est = msd_diffusivity(&paths, &recs[0].times, 0.2).unwrap();
    assert!((est.trace.value - 6.0).abs() < 3.0 * est.trace.stderr, "{:?}", est.trace);
    for (_, e) in &est.off_diagonal {
        assert!(e.value.abs() < 3.0 * e.stderr);
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    let c = vec![1.0; 100];
    let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
    assert!(ks_two_sample(&c, &v).is_err());
    assert!(ks_two_sample(&v[..10], &v).is_err());
    assert!(batch_means_ci(&v[..10]).is_err());
    assert!(correlation(&c, &v).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimators_ignore_replica_order(seed in 0u64..u64::MAX, rot in 1usize..39) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let paths: Vec<Vec<Vec<f64>>> = (0..40)
            .map(|_| {
                let mut x = [0.0f64; 2];
                times
                    .iter()
                    .map(|_| {
                        for v in x.iter_mut() {
                            *v += gauss(&mut rng);
                        }
                        x.to_vec()
                    })
                    .collect()
            })
            .collect();
        let mut perm = paths.clone();
        perm.rotate_left(rot);
        perm.reverse();
        let a = msd_diffusivity(&paths, &times, 0.1).unwrap();
        let b = msd_diffusivity(&perm, &times, 0.1).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
        prop_assert!(close(a.trace.value, b.trace.value));
        prop_assert!(close(a.trace.stderr, b.trace.stderr));
        for (u, v) in a.per_coord.iter().zip(&b.per_coord) {
            prop_assert!(close(u.value, v.value) && close(u.stderr, v.stderr));
        }
        let xa: Vec<f64> = paths.iter().map(|p| p[20][0]).collect();
        let ya: Vec<f64> = paths.iter().map(|p| p[10][1]).collect();
        let xb: Vec<f64> = perm.iter().map(|p| p[20][0]).collect();
        let yb: Vec<f64> = perm.iter().map(|p| p[10][1]).collect();
        let ca = correlation(&xa, &ya).unwrap();
        let cb = correlation(&xb, &yb).unwrap();
        prop_assert!(close(ca.value, cb.value));
    }

    #[test]
    fn planted_power_laws(c in 0.1f64..10.0, k in 0.5f64..2.0) {
        let t: Vec<f64> = (1..=50).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|s| c * s.powf(k)).collect();
        let e = exponent_fit(&t, &y).unwrap();
        prop_assert!((e.value - k).abs() < 1e-9);
    }
}
