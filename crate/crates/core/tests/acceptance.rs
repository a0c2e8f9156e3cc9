//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Set `MISCLASSIT_ACCEPTANCE_QUICK=1` to run the long Monte Carlo criteria at
//! reduced size; their verdicts are then only indicative.

mod common;

use std::time::Duration;

use common::criteria::*;

type Criterion = (&'static str, Duration, Box<dyn FnOnce() -> Verdict>);

fn main() {
    let quick = std::env::var("MISCLASSIT_ACCEPTANCE_QUICK").is_ok_and(|v| v == "1");
    let (reps4, reps5, b5, reps9) = if quick { (40, 20, 100, 30) } else { (250, 250, 400, 100) };
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        ("score matches gradient of pseudo log-likelihood", secs(5), Box::new(c1_score_gradient)),
        ("PMLE and naive fit match search oracles", secs(10), Box::new(c2_oracles)),
        ("reduction identities", secs(10), Box::new(c3_reductions)),
        ("eta design at eta = 0.9 (bias, MSE, ordering)", secs(15 * 60), Box::new(move || c4_table5(reps4))),
        ("model (a) coverage, n = 600, n1 = 120", secs(60 * 60), Box::new(move || c5_coverage(reps5, b5))),
        ("misclassification-rate estimator covariance", secs(60), Box::new(c6_theta_clt)),
        ("bootstrap sd against plug-in sd", secs(5 * 60), Box::new(c7_bootstrap_sd)),
        ("structural invariants", secs(2 * 60), Box::new(c8_invariants)),
        ("contaminated-data fit at eta = 0.6", secs(15 * 60), Box::new(move || c9_nonidentifiability(reps9))),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let (v, el) = timed(budget, check);
        failed += !v.pass as usize;
        println!(
            "criterion {}: {} [{}] {} ({:.1}s)",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            name,
            v.detail,
            el.as_secs_f64()
        );
    }
    if quick {
        println!("quick mode: Monte Carlo criteria ran at reduced size");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
