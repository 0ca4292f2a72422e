use super::*;
use crate::channels::{ptm_rx, ptm_rz, SuperBra, SuperKet};
use crate::gateset::{minimal_parameterization, rep_on_layout, GateSet};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};

fn ramsey_fiducials() -> Vec<Sequence> {
    vec![
        Sequence::empty(),
        Sequence::new(["Rx"]),
        Sequence::new(["Rx", "Rx"]),
        Sequence::new(["Rx", "dt", "Rx"]),
    ]
}

fn ramsey_layout() -> Arc<Layout> {
    Arc::new(minimal_parameterization(&["Rx".into(), "dt".into()], &ramsey_fiducials()).unwrap())
}

fn gate_set(omega: f64, effect: SuperBra) -> GateSet {
    let mut gates = BTreeMap::new();
    gates.insert("Rx".to_string(), ptm_rx(FRAC_PI_2));
    gates.insert("dt".to_string(), ptm_rz(omega));
    GateSet::new(SuperKet::ground(2).unwrap(), effect, gates).unwrap()
}

/// Particles whose every sequence has probability `p` (effect `p * I`).
fn constant_cloud(ps: &[f64]) -> ParticleCloud {
    let layout = ramsey_layout();
    let particles = ps
        .iter()
        .map(|&p| {
            let e = SuperBra::new(DVector::from_vec(vec![p * SQRT_2, 0.0, 0.0, 0.0]), 2).unwrap();
            rep_on_layout(&gate_set(0.1, e), layout.clone()).unwrap().minimal
        })
        .collect();
    ParticleCloud::uniform(layout, particles).unwrap()
}

fn omega_cloud(omegas: &[f64]) -> ParticleCloud {
    let layout = ramsey_layout();
    let e = SuperKet::ground(2).unwrap().as_bra();
    let particles = omegas
        .iter()
        .map(|&w| rep_on_layout(&gate_set(w, e.clone()), layout.clone()).unwrap().minimal)
        .collect();
    ParticleCloud::uniform(layout, particles).unwrap()
}

fn ramsey_seq(n: usize) -> Sequence {
    Sequence::new(["Rx"]).concat(&Sequence::new(["dt"]).power(n)).concat(&Sequence::new(["Rx"]))
}

#[test]
fn ess_examples() {
    let mut c = constant_cloud(&[0.5; 6]);
    assert!((effective_sample_size(&c) - 6.0).abs() < 1e-12);
    c.weights = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    assert!((effective_sample_size(&c) - 1.0).abs() < 1e-12);
    c.weights = vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
    assert!((effective_sample_size(&c) - 2.0).abs() < 1e-12);
}

#[test]
fn direct_bayes_rule() {
    let mut c = constant_cloud(&[0.2, 0.8]);
    reweight(&mut c, &Datum::new(Sequence::empty(), 1, 1).unwrap(), 0).unwrap();
    assert!((c.weights[0] - 0.2).abs() < 1e-12);
    assert!((c.weights[1] - 0.8).abs() < 1e-12);

    let mut sure = constant_cloud(&[1.0, 1.0, 1.0]);
    reweight(&mut sure, &Datum::new(Sequence::empty(), 1, 1).unwrap(), 0).unwrap();
    assert!(sure.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));

    let mut flat = constant_cloud(&[0.37; 4]);
    reweight(&mut flat, &Datum::new(ramsey_seq(3), 50, 20).unwrap(), 0).unwrap();
    assert!(flat.weights.iter().all(|w| (w - 0.25).abs() < 1e-15));
}

#[test]
fn invalid_data_and_failure() {
    assert!(Datum::new(Sequence::empty(), 0, 0).is_err());
    assert!(Datum::new(Sequence::empty(), 3, 4).is_err());
    assert_eq!(log_likelihood(0.0, 5, 1), f64::NEG_INFINITY);
    assert_eq!(log_likelihood(1.0, 5, 5), 0.0);
    let dead = vec![log_likelihood(0.0, 5, 1); 3];
    let err = normalize_log_weights(&dead, 7).unwrap_err();
    assert!(matches!(err, Error::InferenceFailure { update: 7 }));
    // A hypothesis without a usable Gram matrix predicts 1/2 rather than failing.
    let mut blind = constant_cloud(&[0.0, 0.0]);
    reweight(&mut blind, &Datum::new(Sequence::empty(), 5, 1).unwrap(), 0).unwrap();
}

#[test]
fn update_order_does_not_matter_without_resampling() {
    let omegas: Vec<f64> = (0..50).map(|i| 0.2 + 0.004 * i as f64).collect();
    let data: Vec<Datum> = (2..12)
        .map(|n| Datum::new(ramsey_seq(n), 20, (n as u64 * 7) % 21).unwrap())
        .collect();
    let mut a = omega_cloud(&omegas);
    let mut b = omega_cloud(&omegas);
    for d in &data {
        reweight(&mut a, d, 0).unwrap();
    }
    for d in data.iter().rev() {
        reweight(&mut b, d, 0).unwrap();
    }
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < WEIGHT_TOL);
}

#[test]
fn multinomial_when_a_is_one() {
    let mut c = omega_cloud(&[0.1, 0.2, 0.3, 0.4]);
    c.weights = vec![0.7, 0.1, 0.1, 0.1];
    let before = c.particles.clone();
    let smoothed = liu_west_resample(&mut c, 1.0, &SeedTree::new(3));
    assert!(!smoothed);
    for p in &c.particles {
        assert!(before.contains(p));
    }
    assert!(c.weights.iter().all(|w| (w - 0.25).abs() < 1e-15));
}

#[test]
fn degenerate_cloud_is_unchanged() {
    let mut c = omega_cloud(&[0.3; 5]);
    let before = c.particles.clone();
    liu_west_resample(&mut c, 0.98, &SeedTree::new(4));
    for p in &c.particles {
        assert!((p - &before[0]).amax() < 1e-12);
    }
}

#[test]
fn resampling_preserves_mean_in_expectation() {
    let n = 400;
    let omegas: Vec<f64> = (0..n).map(|i| 0.1 + 0.5 * (i as f64 / n as f64)).collect();
    let mut base = omega_cloud(&omegas);
    reweight(&mut base, &Datum::new(ramsey_seq(4), 10, 6).unwrap(), 0).unwrap();
    let mu = posterior_mean(&base);
    let sd = posterior_covariance(&base).diagonal().map(f64::sqrt);
    for trial in 0..10 {
        let mut c = base.clone();
        liu_west_resample(&mut c, 0.98, &SeedTree::new(100 + trial));
        let after = posterior_mean(&c);
        for k in 0..mu.len() {
            assert!((after[k] - mu[k]).abs() <= 5.0 * sd[k] / (n as f64).sqrt() + 1e-12);
        }
    }
}

#[test]
fn resampling_is_thread_count_independent() {
    let omegas: Vec<f64> = (0..64).map(|i| 0.2 + 0.01 * i as f64).collect();
    let mut base = omega_cloud(&omegas);
    reweight(&mut base, &Datum::new(ramsey_seq(5), 10, 3).unwrap(), 0).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut c = base.clone();
            liu_west_resample(&mut c, 0.98, &SeedTree::new(5));
            c.particles
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn estimators() {
    let one = omega_cloud(&[0.3]);
    assert_eq!(posterior_mean(&one), one.particles[0]);
    let two = omega_cloud(&[0.2, 0.4]);
    let mid = (&two.particles[0] + &two.particles[1]) / 2.0;
    assert!((posterior_mean(&two) - mid).amax() < 1e-15);
    assert!(posterior_covariance(&one).amax() < 1e-15);
}

#[test]
fn posterior_mean_minimizes_quadratic_risk() {
    let mut rng = SeedTree::new(6).stream("risk", 0);
    let omegas: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut c = omega_cloud(&omegas);
    let w: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    c.weights = w.iter().map(|x| x / total).collect();
    let best = quadratic_risk(&c, &posterior_mean(&c));
    for _ in 0..100 {
        let lambda: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let s: f64 = lambda.iter().sum();
        let lambda: Vec<f64> = lambda.iter().map(|x| x / s).collect();
        let candidate = weighted_mean(&c.particles, &lambda);
        assert!(best <= quadratic_risk(&c, &candidate));
    }
}

#[test]
fn predictions() {
    let det = constant_cloud(&[0.3, 0.3]);
    let p = predict(&det, &ramsey_seq(2)).unwrap();
    assert!((p.bme - 0.3).abs() < 1e-12 && p.variance < 1e-20);
    let p = weighted_moments(&[0.0, 1.0], &[0.5, 0.5]);
    assert_eq!((p.bme, p.variance), (0.5, 0.25));
    let split = constant_cloud(&[0.1, 0.9]);
    let p = predict(&split, &Sequence::empty()).unwrap();
    assert!((p.bme - 0.5).abs() < 1e-12);
    assert!((p.variance - 0.16).abs() < 1e-12);
}

#[test]
fn losses() {
    assert_eq!(prediction_loss(0.4, 0.4, LossKind::Quadratic), 0.0);
    assert!(prediction_loss(0.4, 0.4, LossKind::Kl).abs() < 1e-15);
    assert!((prediction_loss(0.6, 0.5, LossKind::Quadratic) - 0.01).abs() < 1e-15);
    let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    assert!((prediction_loss(0.5, 0.75, LossKind::Kl) - expect).abs() < 1e-12);
    assert!((expect - 0.13081).abs() < 1e-5);
    assert!(prediction_loss(0.0, 0.5, LossKind::Kl).is_finite());
}

const RAMSEY_PRIOR: &str = r#"{
  "state": [{"kind": "exact", "ideal": "zero"}, {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}],
  "effect": [{"kind": "exact", "ideal": "zero"}, {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}],
  "gates": {
    "Rx": [{"kind": "over-rotation", "axis": "x", "angle": 1.5707963267948966, "offset": {"mean": 0.0, "variance": 0.001}}],
    "dt": [{"kind": "over-rotation", "axis": "z", "offset": {"low": 0.0, "high": 1.0}}]
  },
  "fiducials": [[], ["Rx"], ["Rx", "Rx"], ["Rx", "dt", "Rx"]]
}"#;

#[test]
fn induced_prior_is_physical() {
    let spec: PriorSpec = serde_json::from_str(RAMSEY_PRIOR).unwrap();
    let cloud = induce_operational_prior(&spec, 200, &SeedTree::new(7)).unwrap();
    assert_eq!(cloud.len(), 200);
    for p in cloud.particles() {
        assert!(p.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }
    let w = cloud.weights();
    let spread = w.iter().cloned().fold(f64::MIN, f64::max) - w.iter().cloned().fold(f64::MAX, f64::min);
    assert_eq!(spread, 0.0);
    // same seed, same cloud
    let again = induce_operational_prior(&spec, 200, &SeedTree::new(7)).unwrap();
    assert_eq!(again.particles(), cloud.particles());
}

#[test]
fn exact_prior_gives_identical_particles() {
    let mut spec: PriorSpec = serde_json::from_str(RAMSEY_PRIOR).unwrap();
    spec.state.truncate(1);
    spec.effect.truncate(1);
    spec.gates.insert(
        "dt".into(),
        vec![crate::channels::ChannelPrior::OverRotation {
            axis: crate::channels::Axis::Z,
            angle: 0.3,
            offset: crate::channels::Dist::Fixed(0.0),
        }],
    );
    spec.gates.insert(
        "Rx".into(),
        vec![crate::channels::ChannelPrior::Exact {
            ideal: crate::channels::Ideal::Named("rx90".into()),
        }],
    );
    let cloud = induce_operational_prior(&spec, 10, &SeedTree::new(8)).unwrap();
    assert!(cloud.particles().iter().all(|p| p == &cloud.particles()[0]));
}

#[test]
fn incomplete_fiducials_are_reported() {
    let mut spec: PriorSpec = serde_json::from_str(RAMSEY_PRIOR).unwrap();
    spec.fiducials = vec![Sequence::empty(), Sequence::new(["dt"])];
    let err = induce_operational_prior(&spec, 3, &SeedTree::new(9)).unwrap_err();
    assert!(matches!(err, Error::IncompleteFiducials(_)));
}

#[test]
fn checkpoint_round_trip() {
    let mut c = omega_cloud(&[0.1, 0.2, 0.3]);
    reweight(&mut c, &Datum::new(ramsey_seq(3), 4, 1).unwrap(), 0).unwrap();
    let ck = Checkpoint::capture(&c, &SeedTree::new(1), 1);
    let json = serde_json::to_string(&ck).unwrap();
    let back: Checkpoint = serde_json::from_str(&json).unwrap();
    assert_eq!(back, ck);
    let restored = back.restore().unwrap();
    assert_eq!(restored.particles(), c.particles());
    assert_eq!(restored.weights(), c.weights());
}

#[test]
fn bayes_update_resamples_below_threshold() {
    let omegas: Vec<f64> = (0..200).map(|i| 0.005 * i as f64).collect();
    let mut c = omega_cloud(&omegas);
    let seeds = SeedTree::new(10);
    let settings = SmcSettings::default();
    let mut resampled = false;
    for (u, n) in (2..30).enumerate() {
        let p = (0.35 * n as f64 / 2.0).sin().powi(2);
        let k = (p * 200.0).round() as u64;
        let diag = bayes_update(&mut c, &Datum::new(ramsey_seq(n), 200, k).unwrap(), &settings, &seeds, u).unwrap();
        resampled |= diag.resampled;
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < WEIGHT_TOL);
        assert!(c.weights.iter().all(|w| *w >= 0.0));
    }
    assert!(resampled);
    let p = predict(&c, &ramsey_seq(40)).unwrap();
    assert!((p.bme - (0.35f64 * 20.0).sin().powi(2)).abs() < 0.05);
}
