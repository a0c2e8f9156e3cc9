mod common;

use common::criteria::{c1_score_gradient, c2_oracles, fixture, naive_oracle_data};
use common::*;
use misclassit::io::write_dataset;
use misclassit::sim::{replicate_dataset, Covariate, CovariateSpec, ModelName, SimConfig, SimModel};
use misclassit::{estimate_theta_from, fit_naive, fit_pmle, pseudo_loglik, score, MisclassProbs, SolverOptions};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn fixture_is_reproducible_from_its_seed() {
    let model = SimModel {
        name: ModelName::Custom,
        beta0: vec![1.5],
        theta0: MisclassProbs::new(0.1, 0.2),
        covariates: vec![CovariateSpec::raw(Covariate::Normal { mean: 0.0, sd: 1.0 })],
    };
    let cfg = SimConfig { n: 30, f_n: 1.0 / 3.0, seed: 20261018, ..SimConfig::default() };
    let data = replicate_dataset(&model, &cfg, 0).unwrap();
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), std::fs::read_to_string(FIXTURE).unwrap());
    assert_eq!(fixture(), data);
}

#[test]
fn fixture_pseudo_loglik_matches_hand_formula() {
    let data = fixture();
    let theta = estimate_theta_from(&data).unwrap().theta;
    let (t1, t2) = (theta.theta1, theta.theta2);
    for b in [-1.0, 0.3, 2.0] {
        let mut total = 0.0;
        for r in data.validation() {
            let p = sigmoid(b * r.x[0]);
            total += match (r.y, r.ytilde) {
                (true, true) => ((1.0 - t2) * p).ln(),
                (true, false) => (t2 * p).ln(),
                (false, true) => (t1 * (1.0 - p)).ln(),
                (false, false) => ((1.0 - t1) * (1.0 - p)).ln(),
            };
        }
        for r in data.nonvalidation() {
            let p = sigmoid(b * r.x[0]);
            let h3 = t1 * (1.0 - p) + (1.0 - t2) * p;
            total += if r.ytilde { h3.ln() } else { (1.0 - h3).ln() };
        }
        let lib = pseudo_loglik(&data, &DVector::from_element(1, b), &theta).unwrap();
        assert!((lib - total / data.n() as f64).abs() < 1e-13);
    }
}

#[test]
fn score_is_the_gradient() {
    let v = c1_score_gradient();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn fits_agree_with_search_oracles() {
    let v = c2_oracles();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn pmle_maximises_pseudo_loglik_on_fixture() {
    let data = fixture();
    let theta = estimate_theta_from(&data).unwrap().theta;
    let b = fit_pmle(&data, &SolverOptions::default()).unwrap().beta_hat;
    let at = |v: f64| pseudo_loglik(&data, &DVector::from_element(1, v), &theta).unwrap();
    for d in [1e-3, 1e-2, 0.1, 1.0] {
        assert!(at(b[0]) > at(b[0] + d) && at(b[0]) > at(b[0] - d));
    }
}

#[test]
fn naive_fit_is_a_stationary_point_of_the_direct_formula() {
    let d = naive_oracle_data();
    let rows: Vec<(bool, Vec<f64>)> = d.pooled_surrogate().map(|r| (r.ytilde, r.x.to_vec())).collect();
    let b = fit_naive(&d, &SolverOptions::default()).unwrap().beta_hat;
    let mle = logistic_mle(&rows, 2);
    assert!((b - mle).amax() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn score_gradient_on_random_inputs(
        seed in 0u64..1000,
        b0 in -1.0..1.0f64,
        b1 in -2.0..2.0f64,
        t1 in 0.01..0.4f64,
        t2 in 0.01..0.4f64,
    ) {
        let data = random_dataset(&mut rng(seed), 20, 60, &[b0, b1], MisclassProbs::new(t1, t2));
        let theta = MisclassProbs::new(t1, t2);
        let beta = DVector::from_column_slice(&[b1, b0]);
        let z = score(&data, &beta, &theta).unwrap();
        for j in 0..2 {
            let h = 1e-5;
            let mut bp = beta.clone();
            bp[j] += h;
            let mut bm = beta.clone();
            bm[j] -= h;
            let fd = (pseudo_loglik(&data, &bp, &theta).unwrap() - pseudo_loglik(&data, &bm, &theta).unwrap()) / (2.0 * h);
            prop_assert!((z[j] - fd).abs() < 1e-7);
        }
    }
}
