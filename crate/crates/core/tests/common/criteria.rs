//! The acceptance criteria as functions returning a verdict and the numbers behind it.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use misclassit::bootstrap::run_bootstrap_from;
use misclassit::estimators::fit_pmle_with_theta;
use misclassit::extensions::theta2_zero_estimate;
use misclassit::io::{read_dataset_path, ReadOptions};
use misclassit::model::inverse_bernoulli_variance;
use misclassit::rng::{substream, StreamTag};
use misclassit::sim::{
    replicate_dataset, run_bias_mse, run_bias_mse_study, run_coverage_study, BiasMseOptions, CiKind, CoverageOptions,
    SimConfig, SimModel,
};
use misclassit::theta::{b0, sigma22};
use misclassit::{
    count_cells, estimate_bundle, estimate_theta, estimate_theta_from, fit_naive, fit_pmle, fit_pmle_grouped,
    fit_pmle_theta2_zero, pseudo_loglik, score, BootstrapConfig, GroupedDataset, Method, MisclassProbs, SolverOptions,
    ThetaBox, ValidationObs,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Runs `f` and fails it when it exceeds `budget`.
pub fn timed(budget: Duration, f: impl FnOnce() -> Verdict) -> (Verdict, Duration) {
    let t = Instant::now();
    let mut v = f();
    let el = t.elapsed();
    if el > budget {
        v.pass = false;
        v.detail.push_str(&format!("; over time budget {budget:?}"));
    }
    (v, el)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Largest `|score - central difference of the pseudo log-likelihood|` over 20 random datasets.
pub fn c1_score_gradient() -> Verdict {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = r.random_range(1..=5);
        let n1 = r.random_range(10..=60);
        let n2 = r.random_range(20..=140);
        let beta_true: Vec<f64> = (0..p).map(|_| r.random_range(-1.0..1.0)).collect();
        let theta = MisclassProbs::new(r.random_range(0.01..0.45), r.random_range(0.01..0.45));
        let data = random_dataset(&mut r, n1, n2, &beta_true, theta);
        let beta = DVector::from_fn(p, |_, _| r.random_range(-1.5..1.5));
        let theta_hat = estimate_theta_from(&data).unwrap().theta;
        let z = score(&data, &beta, &theta_hat).unwrap();
        for j in 0..p {
            let h = 1e-5;
            let mut bp = beta.clone();
            bp[j] += h;
            let mut bm = beta.clone();
            bm[j] -= h;
            let fd = (pseudo_loglik(&data, &bp, &theta_hat).unwrap() - pseudo_loglik(&data, &bm, &theta_hat).unwrap())
                / (2.0 * h);
            worst = worst.max((z[j] - fd).abs());
        }
    }
    Verdict::new(worst < 1e-6, format!("max |Z - FD| = {worst:.2e} (limit 1e-6)"))
}

pub fn fixture() -> misclassit::Dataset {
    read_dataset_path(std::path::Path::new(FIXTURE), ReadOptions::default()).unwrap()
}

/// The n = 40, p = 2 dataset used by the naive lattice oracle.
pub fn naive_oracle_data() -> misclassit::Dataset {
    random_dataset(&mut rng(40), 10, 30, &[-0.4, 1.2], MisclassProbs::new(0.1, 0.2))
}

pub fn c2_oracles() -> Verdict {
    let data = fixture();
    let theta = estimate_theta_from(&data).unwrap().theta;
    let oracle =
        golden_max(|b| pseudo_loglik(&data, &DVector::from_element(1, b), &theta).unwrap(), -20.0, 20.0, 1e-10);
    let pmle = fit_pmle(&data, &SolverOptions::default()).unwrap().beta_hat[0];
    let gap_pmle = (pmle - oracle).abs();

    let d40 = naive_oracle_data();
    let rows: Vec<(bool, Vec<f64>)> = d40.pooled_surrogate().map(|r| (r.ytilde, r.x.to_vec())).collect();
    let grid = lattice_argmax_2d(|b| naive_loglik(&rows, b), [0.0, 0.0], 5.0, 1e-3);
    let naive = fit_naive(&d40, &SolverOptions::default()).unwrap().beta_hat;
    let gap_naive = (naive[0] - grid[0]).abs().max((naive[1] - grid[1]).abs());
    Verdict::new(
        gap_pmle <= 1e-4 && gap_naive <= 2e-3,
        format!("PMLE vs golden section {gap_pmle:.2e} (<= 1e-4); naive vs lattice {gap_naive:.2e} (<= 2e-3)"),
    )
}

pub fn c3_reductions() -> Verdict {
    let opts = SolverOptions::default();
    let full = random_dataset(&mut rng(3), 150, 0, &[0.3, -0.8, 1.1], MisclassProbs::new(0.1, 0.2));
    let rows: Vec<(bool, Vec<f64>)> = full.validation().map(|r| (r.y, r.x.to_vec())).collect();
    let gap_f1 = (fit_pmle(&full, &opts).unwrap().beta_hat - logistic_mle(&rows, 3)).amax();

    let d = random_dataset(&mut rng(4), 60, 240, &[0.3, -0.8, 1.1], MisclassProbs::new(0.1, 0.2));
    let base = fit_pmle(&d, &opts).unwrap().beta_hat;
    let grouped = fit_pmle_grouped(&GroupedDataset::new(vec![d.clone()]).unwrap(), &opts).unwrap();
    let gap_k1 = (grouped.fit.beta_hat - &base).amax();

    let one_sided = random_dataset(&mut rng(5), 80, 220, &[0.2, 1.0, -0.5], MisclassProbs::new(0.15, 0.0));
    let t1 = theta2_zero_estimate(&one_sided).unwrap().theta.theta1;
    let special = fit_pmle_theta2_zero(&one_sided, &opts).unwrap().beta_hat;
    let forced = fit_pmle_with_theta(&one_sided, MisclassProbs::new(t1, 0.0), &opts).unwrap().beta_hat;
    let exact = special == forced;
    Verdict::new(
        gap_f1 <= 1e-8 && gap_k1 <= 1e-10 && exact,
        format!("f_n = 1 gap {gap_f1:.2e} (<= 1e-8); K = 1 gap {gap_k1:.2e} (<= 1e-10); theta2 = 0 identical: {exact}"),
    )
}

fn beta1(s: &misclassit::sim::BiasMseSummary, m: Method) -> misclassit::sim::Moments {
    s.method(m).unwrap().parameter("beta1").unwrap().moments.unwrap()
}

pub fn c4_table5(reps: usize) -> Verdict {
    let cfg = SimConfig { n: 300, f_n: 0.2, reps, seed: 1, ..SimConfig::default() };
    let s = &run_bias_mse_study(&[0.9], &cfg, &BiasMseOptions::default()).unwrap()[0];
    let pm = beta1(s, Method::Pmle);
    let nv = beta1(s, Method::Naive);
    let jm = beta1(s, Method::Jmle);
    let cm = beta1(s, Method::Cmle);
    let bias_ok = within(pm.bias, 0.0178, 0.05);
    let mse_ok = within(pm.mse, 0.0842, 0.5 * 0.0842);
    let naive_ok = nv.bias <= -0.35;
    let order_ok = pm.mse < jm.mse && jm.mse < cm.mse;
    Verdict::new(
        bias_ok && mse_ok && naive_ok && order_ok,
        format!(
            "PMLE bias {:.4} (0.0178 +/- 0.05), MSE {:.4} (0.0842 +/- 50%); naive bias {:.4} (<= -0.35); \
             MSE PMLE {:.4} < JMLE {:.4} < CMLE {:.4}: {order_ok}",
            pm.bias, pm.mse, nv.bias, pm.mse, jm.mse, cm.mse
        ),
    )
}

pub fn c5_coverage(reps: usize, b: usize) -> Verdict {
    let cfg = SimConfig { n: 600, f_n: 0.2, reps, seed: 1, b, level: 0.95 };
    let s = run_coverage_study(&SimModel::model_a(), &cfg, &CoverageOptions::default()).unwrap();
    let published = [
        (CiKind::Asymptotic, [0.952, 0.940, 0.964, 0.980], [0.944, 0.643, 1.364, 1.958], 0.04),
        (CiKind::Bootstrap, [0.956, 0.956, 0.964, 0.996], [0.902, 0.67, 1.353, 2.035], 0.05),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, cov, len, tol) in published {
        for j in 0..4 {
            let st = s.get(&format!("beta{}", j + 1), kind).unwrap().stat.unwrap();
            let ok = within(st.coverage, cov[j], tol) && within(st.avg_length, len[j], 0.25 * len[j]);
            pass &= ok;
            parts.push(format!(
                "{}{} {:.3}/{:.3}{}",
                if kind == CiKind::Asymptotic { "A" } else { "B" },
                j + 1,
                st.coverage,
                st.avg_length,
                if ok { "" } else { "!" }
            ));
        }
    }
    Verdict::new(pass, format!("coverage/length {}", parts.join(" ")))
}

pub fn c6_theta_clt() -> Verdict {
    let (n1, reps, a0) = (500usize, 2000u64, 0.5);
    let theta0 = MisclassProbs::new(0.1, 0.3);
    let scale = (n1 as f64).sqrt();
    let draws: Vec<[f64; 2]> = (0..reps)
        .map(|r| {
            let mut g = substream(6, r, StreamTag::DataGeneration);
            let obs: Vec<ValidationObs> = (0..n1)
                .map(|_| {
                    let y = g.random::<f64>() < a0;
                    let flip = g.random::<f64>() < if y { theta0.theta2 } else { theta0.theta1 };
                    ValidationObs { y, ytilde: y != flip, x: vec![1.0] }
                })
                .collect();
            let t = estimate_theta(count_cells(&obs).unwrap()).unwrap().theta;
            [scale * (t.theta1 - theta0.theta1), scale * (t.theta2 - theta0.theta2)]
        })
        .collect();
    let m = reps as f64;
    let mean = [draws.iter().map(|d| d[0]).sum::<f64>() / m, draws.iter().map(|d| d[1]).sum::<f64>() / m];
    let cov = |a: usize, b: usize| draws.iter().map(|d| (d[a] - mean[a]) * (d[b] - mean[b])).sum::<f64>() / (m - 1.0);
    let (pi2, pi3) = (a0 * theta0.theta2, (1.0 - a0) * theta0.theta1);
    let bm = b0(a0, pi2, pi3);
    let target = bm * sigma22(a0, pi2, pi3) * bm.transpose();
    let rel = |a: usize, b: usize| (cov(a, b) - target[(a, b)]).abs() / target[(a, b)].abs();
    let off_tol = 0.15 * (target[(0, 0)] * target[(1, 1)]).sqrt();
    let off = (cov(0, 1) - target[(0, 1)]).abs();
    let closed = within(target[(0, 0)], 0.18, 1e-12) && within(target[(1, 1)], 0.42, 1e-12);
    Verdict::new(
        rel(0, 0) <= 0.15 && rel(1, 1) <= 0.15 && off <= off_tol && closed,
        format!(
            "MC cov [[{:.4}, {:.4}], [., {:.4}]] vs target [[{:.4}, {:.4}], [., {:.4}]]; \
             relative errors {:.3}, {:.3}; off-diagonal |diff| {off:.4} <= {off_tol:.4}",
            cov(0, 0),
            cov(0, 1),
            cov(1, 1),
            target[(0, 0)],
            target[(0, 1)],
            target[(1, 1)],
            rel(0, 0),
            rel(1, 1)
        ),
    )
}

pub fn c7_bootstrap_sd() -> Verdict {
    let cfg = SimConfig { n: 600, f_n: 0.2, seed: 7, ..SimConfig::default() };
    let data = replicate_dataset(&SimModel::model_a(), &cfg, 0).unwrap();
    let opts = SolverOptions::default();
    let fit = fit_pmle(&data, &opts).unwrap();
    let bundle = estimate_bundle(&data, &fit.beta_hat, fit.theta_estimate.as_ref().unwrap()).unwrap();
    let n = data.n() as f64;
    let plug_in = (n * bundle.beta_cov[(1, 1)]).sqrt();
    let bcfg = BootstrapConfig { b: 2000, seed: 77, ..BootstrapConfig::default() };
    let draws = run_bootstrap_from(&data, &fit, &opts, &bcfg).unwrap();
    let stats: Vec<f64> = draws.beta_star.column(1).iter().map(|b| n.sqrt() * (b - fit.beta_hat[1])).collect();
    let m = stats.len() as f64;
    let mu = stats.iter().sum::<f64>() / m;
    let sd = (stats.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let rel = (sd - plug_in).abs() / plug_in;
    Verdict::new(rel <= 0.2, format!("bootstrap sd {sd:.4} vs plug-in {plug_in:.4}: relative gap {rel:.3} (<= 0.2)"))
}

fn psd_ok(m: &DMatrix<f64>) -> bool {
    let scale = max_eigen(m).abs().max(1e-300);
    asymmetry(m) <= 1e-12 * scale.max(1.0) && min_eigen(m) >= -1e-10 * scale
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

pub fn c8_invariants() -> Verdict {
    let mut notes = Vec::new();

    let bx = ThetaBox { lower: 0.02, upper: 0.6 };
    let m0 = bx.m0();
    let mut r = rng(8);
    let mut bound_ok = true;
    for _ in 0..1_000_000 {
        let x = [1.0, r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let beta = DVector::from_fn(3, |_, _| r.random_range(-3.0..3.0));
        let theta = MisclassProbs::new(r.random_range(bx.lower..bx.upper), r.random_range(bx.lower..bx.upper));
        if !bx.contains(&theta) {
            continue;
        }
        let v = inverse_bernoulli_variance(&beta, &theta, &x).unwrap();
        bound_ok &= (4.0..m0).contains(&v);
    }
    notes.push(format!("bound 4 <= 1/(h3(1-h3)) < {m0:.2}: {bound_ok}"));

    let cfg = SimConfig { n: 600, f_n: 0.2, seed: 8, ..SimConfig::default() };
    let data = replicate_dataset(&SimModel::model_a(), &cfg, 0).unwrap();
    let fit = fit_pmle(&data, &SolverOptions::default()).unwrap();
    let b = estimate_bundle(&data, &fit.beta_hat, fit.theta_estimate.as_ref().unwrap()).unwrap();
    let psd = [&b.sigma0, &b.sigma11, &b.gamma, &b.sigma22].iter().all(|m| psd_ok(m));
    let zdot_nd = asymmetry(&b.zdot) <= 1e-12 && max_eigen(&b.zdot) < 0.0;
    notes.push(format!("symmetric PSD: {psd}; Zdot negative definite: {zdot_nd}"));

    let small = SimConfig { n: 200, f_n: 0.3, reps: 12, seed: 8, ..SimConfig::default() };
    let study = run_bias_mse(&SimModel::eta_design(0.7).unwrap(), &small, &BiasMseOptions::default()).unwrap();
    let mut identity_ok = true;
    for m in &study.methods {
        for (j, p) in m.parameters.iter().enumerate() {
            let mo = p.moments.unwrap();
            let direct = m.estimates.iter().map(|e| (e[j] - p.truth).powi(2)).sum::<f64>() / m.estimates.len() as f64;
            identity_ok &= (mo.variance + mo.bias * mo.bias - direct).abs() <= 1e-12 * direct.max(1.0);
            identity_ok &= mo.mse == mo.variance + mo.bias * mo.bias;
        }
    }
    notes.push(format!("bias^2 + var = MSE: {identity_ok}"));

    let run_all = || {
        let s = run_bias_mse(&SimModel::model_b(), &small, &BiasMseOptions::default()).unwrap();
        let bc = BootstrapConfig { b: 60, seed: 3, ..BootstrapConfig::default() };
        let boot = run_bootstrap_from(&data, &fit, &SolverOptions::default(), &bc).unwrap();
        let cov_cfg = SimConfig { n: 300, f_n: 0.2, reps: 3, seed: 2, b: 20, level: 0.9 };
        let cov = run_coverage_study(&SimModel::model_a(), &cov_cfg, &CoverageOptions::default()).unwrap();
        (s, boot, cov)
    };
    let one = in_pool(1, run_all);
    let four = in_pool(4, run_all);
    let det = one == four;
    notes.push(format!("identical results on 1 and 4 threads: {det}"));

    Verdict::new(bound_ok && psd && zdot_nd && identity_ok && det, notes.join("; "))
}

pub fn c9_nonidentifiability(reps: usize) -> Verdict {
    let cfg = SimConfig { n: 300, f_n: 0.2, reps, seed: 1, ..SimConfig::default() };
    let s = &run_bias_mse_study(&[0.6], &cfg, &BiasMseOptions::default()).unwrap()[0];
    let pm = beta1(s, Method::Pmle);
    let cm = beta1(s, Method::Cmle);
    let cmle = s.method(Method::Cmle).unwrap();
    let p = s.model.beta0.len();
    let outside =
        cmle.estimates.iter().zip(&cmle.converged).filter(|(e, c)| **c && !(0.0..=1.0).contains(&e[p])).count();
    let ratio = cm.mse / pm.mse;
    Verdict::new(
        ratio >= 10.0 && outside >= 1,
        format!(
            "CMLE/PMLE MSE ratio {ratio:.1} (>= 10); converged CMLE fits with theta1 outside [0, 1]: {outside} \
             (>= 1); CMLE non-converged {}",
            cmle.failures.unconverged
        ),
    )
}
