mod common;

use common::{random_dataset, random_vec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdca::baselines::{group_soft_threshold, l21_objective, run_spgd, SpgdConfig, StepRule};
use sdca::data::{DatasetBuilder, Provenance};
use sdca::dc::SolverError;
use sdca::mlr::{build_problem, ModelState, PenaltyConfig, PenaltyKind};
use sdca::prox::GroupNorm;

fn one_step(lambda: f64, step: StepRule) -> SpgdConfig {
    SpgdConfig {
        batch_fraction: 1.0,
        lambda,
        step,
        max_epochs: 1,
        ..SpgdConfig::default()
    }
}

#[test]
fn w_update_is_row_wise_group_soft_threshold() {
    let (d, q) = (8, 3);
    let ds = random_dataset(40, d, q, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut m0 = ModelState::zeros(d, q);
    m0.w = random_vec(&mut rng, d * q, 0.5);
    m0.b = random_vec(&mut rng, q, 0.5);
    let (alpha, lambda) = (ds.n() as f64 / 10.0, 0.02);
    let out = run_spgd(&ds, &one_step(lambda, StepRule::InverseLinear), &m0, None).unwrap();

    // Independent reference: full-batch gradient from the MLR subgradient
    // (∇ℓ_i = ρW − U_i) and the soft-threshold written out by hand.
    let p = build_problem(&ds, PenaltyConfig::new(PenaltyKind::Exponential, 1.0, 0.0, GroupNorm::L2).unwrap()).unwrap();
    let mut gw = vec![0.0; d * q];
    let mut gb = vec![0.0; q];
    for i in 0..ds.n() {
        let s = p.component_subgradient(i, &m0).unwrap();
        for k in 0..d * q {
            gw[k] += (p.rho() * m0.w[k] - s.u[k]) / ds.n() as f64;
        }
        for k in 0..q {
            gb[k] += (p.rho() * m0.b[k] - s.v[k]) / ds.n() as f64;
        }
    }
    for j in 0..d {
        let u: Vec<f64> = (0..q).map(|k| m0.w[j * q + k] - alpha * gw[j * q + k]).collect();
        let mut want = vec![0.0; q];
        group_soft_threshold(&u, alpha * lambda, &mut want);
        for k in 0..q {
            assert!((out.model.w[j * q + k] - want[k]).abs() <= 1e-12 * want[k].abs().max(1.0));
        }
    }
    for k in 0..q {
        let want = m0.b[k] - alpha * gb[k];
        assert!((out.model.b[k] - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn huge_lambda_zeroes_w() {
    let ds = random_dataset(30, 5, 3, 3);
    let out = run_spgd(&ds, &one_step(1e6, StepRule::InverseLinear), &ModelState::zeros(5, 3), None).unwrap();
    assert!(out.model.w.iter().all(|w| *w == 0.0));
    assert!(out.model.b.iter().any(|b| *b != 0.0));
}

#[test]
fn small_constant_step_descends_without_penalty() {
    let ds = random_dataset(60, 6, 3, 4);
    let cfg = SpgdConfig {
        batch_fraction: 1.0,
        lambda: 0.0,
        step: StepRule::Constant(0.05),
        max_epochs: 60,
        ..SpgdConfig::default()
    };
    let out = run_spgd(&ds, &cfg, &ModelState::zeros(6, 3), None).unwrap();
    let f: Vec<f64> = out.trace.epoch_records().map(|r| r.objective.unwrap()).collect();
    assert_eq!(f.len(), 61);
    for w in f.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!((l21_objective(&ds, &out.model, 0.0) - f[60]).abs() < 1e-15);
}

#[test]
fn unused_features_stay_zero() {
    let mut b = DatasetBuilder::new(4);
    for i in 0..40 {
        b.push_row(&[(0, (i % 7) as f64 - 3.0), (2, 0.5 * (i % 3) as f64)], (i % 2) + 1).unwrap();
    }
    let ds = b.finish(None, Provenance::InMemory).unwrap();
    let cfg = SpgdConfig {
        max_epochs: 5,
        lambda: 1e-3,
        ..SpgdConfig::default()
    };
    let out = run_spgd(&ds, &cfg, &ModelState::zeros(4, 2), None).unwrap();
    for j in [1, 3] {
        assert!(out.model.row(j).iter().all(|w| *w == 0.0));
    }
    assert_eq!(out.trace.epochs, 5);
}

#[test]
fn deterministic_under_seed_and_validated() {
    let ds = random_dataset(50, 5, 3, 5);
    let cfg = SpgdConfig {
        max_epochs: 3,
        lambda: 1e-2,
        seed: 9,
        ..SpgdConfig::default()
    };
    let a = run_spgd(&ds, &cfg, &ModelState::zeros(5, 3), None).unwrap();
    let b = run_spgd(&ds, &cfg, &ModelState::zeros(5, 3), None).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.trace.iterations(), 30);

    let bad = SpgdConfig { batch_fraction: 0.0, ..cfg.clone() };
    assert!(matches!(run_spgd(&ds, &bad, &ModelState::zeros(5, 3), None), Err(SolverError::Config(_))));
    let mut m0 = ModelState::zeros(5, 3);
    m0.b[0] = f64::NAN;
    assert!(matches!(run_spgd(&ds, &cfg, &m0, None), Err(SolverError::NonFinite { iteration: 0, .. })));
}
