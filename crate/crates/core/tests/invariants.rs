mod common;

use common::criteria::c8_invariants;
use common::*;
use misclassit::inference::estimate_bundle;
use misclassit::{fit_pmle, MisclassProbs, SolverOptions, ThetaBox};
use proptest::prelude::*;

#[test]
fn structural_invariants() {
    let v = c8_invariants();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn box_constant_uses_the_tighter_edge() {
    let b = ThetaBox { lower: 0.05, upper: 0.9 };
    assert!((b.m0() - 1.0 / (0.05 * 0.95)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn plug_in_matrices_are_well_formed(seed in 0u64..500, t1 in 0.02..0.3f64, t2 in 0.02..0.3f64) {
        let d = random_dataset(&mut rng(seed), 50, 150, &[0.2, -0.7, 1.0], MisclassProbs::new(t1, t2));
        let fit = fit_pmle(&d, &SolverOptions::default()).unwrap();
        let b = estimate_bundle(&d, &fit.beta_hat, fit.theta_estimate.as_ref().unwrap()).unwrap();
        prop_assert!(asymmetry(&b.beta_cov) < 1e-12);
        prop_assert!(min_eigen(&b.beta_cov) > 0.0);
        prop_assert!(max_eigen(&b.zdot) < 0.0);
        prop_assert!(b.standard_errors().iter().all(|s| s.is_finite() && *s > 0.0));
    }
}
