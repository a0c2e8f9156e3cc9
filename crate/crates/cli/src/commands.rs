use std::path::{Path, PathBuf};
use std::time::Instant;

use misclassit::bootstrap::ReplicateStatus;
use misclassit::io::{
    read_dataset_path, read_grouped_path, software_version, to_json, write_table, BootstrapSummary, GroupEstimate,
    IntervalRow, ReadOptions, RunReport, REPORT_VERSION,
};
use misclassit::nalgebra::DVector;
use misclassit::sim::{Design, DesignOptions, DesignResult};
use misclassit::{
    estimate_bundle, fit_pmle, fit_pmle_grouped, fit_pmle_theta2_zero, grouped_covariance, percentile_ci_linear,
    percentile_ci_risk, psi, run_bootstrap_from, theta2_zero_covariance, wald_ci, BootstrapConfig, CovarianceBundle,
    Method,
};
use serde::Serialize;

use crate::config::Config;
use crate::{BootstrapArgs, CiArg, CliError, FitArgs, MethodArg, SimulateArgs};

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pmle => Method::Pmle,
            MethodArg::Jmle => Method::Jmle,
            MethodArg::Cmle => Method::Cmle,
            MethodArg::Naive => Method::Naive,
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn read_opts(intercept_flag: bool, cfg: &Config) -> ReadOptions {
    ReadOptions { intercept: intercept_flag || cfg.read.intercept }
}

fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("level {level} outside (0, 1)")))
    }
}

fn attach_wald(
    report: &mut RunReport,
    bundle: &CovarianceBundle,
    beta: &DVector<f64>,
    level: f64,
) -> Result<(), CliError> {
    let cis = wald_ci(bundle, beta, level)?;
    report.covariance = Some(bundle.beta_cov.row_iter().map(|r| r.iter().copied().collect()).collect());
    report.intervals = cis
        .iter()
        .enumerate()
        .map(|(j, (lo, hi))| IntervalRow {
            target: format!("beta{}", j + 1),
            kind: "WALD".into(),
            level,
            estimate: beta[j],
            lower: *lo,
            upper: *hi,
        })
        .collect();
    Ok(())
}

fn finish_report(report: &mut RunReport, start: Instant, no_timing: bool) {
    if !no_timing {
        report.timing_seconds = Some(start.elapsed().as_secs_f64());
    }
}

fn describe(report: &RunReport) {
    eprintln!(
        "{}: n = {}, n1 = {}, {} in {} iterations",
        report.method.name(),
        report.n,
        report.n1,
        if report.diagnostics.converged { "converged" } else { "not converged" },
        report.diagnostics.iterations
    );
    eprintln!("beta  = {}", fmt_vec(&report.estimates.beta));
    if let Some(t) = report.estimates.theta {
        eprintln!("theta = {}", fmt_vec(&t));
    }
    for w in &report.warnings {
        eprintln!("warning: {w:?}");
    }
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = Config::load(a.common.config.as_deref())?;
    check_level(a.level)?;
    let method = Method::from(a.method);
    if a.grouped && a.theta2_zero {
        return Err(CliError::Usage("--grouped and --theta2-zero cannot be combined".into()));
    }
    if (a.grouped || a.theta2_zero) && method != Method::Pmle {
        return Err(CliError::Usage("--grouped and --theta2-zero need --method pmle".into()));
    }
    let ci = a.ci.unwrap_or(if method == Method::Pmle { CiArg::Wald } else { CiArg::None });
    if ci == CiArg::Wald && method != Method::Pmle {
        return Err(CliError::Usage("Wald intervals are available for --method pmle only".into()));
    }
    let read = read_opts(a.data.intercept, &cfg);
    let opts = &cfg.solver;
    let mut report;
    if a.grouped {
        let (ids, gd) = read_grouped_path(&a.data.data, read)?;
        let gfit = fit_pmle_grouped(&gd, opts)?;
        let n1 = gd.groups().iter().map(|g| g.n1()).sum();
        report = RunReport::from_fit("fit", &gfit.fit, gd.n(), n1);
        report.estimates.theta = None;
        report.groups = Some(
            ids.iter()
                .zip(gd.groups())
                .zip(&gfit.theta_estimates)
                .map(|((id, g), est)| GroupEstimate {
                    group: *id,
                    n: g.n(),
                    n1: g.n1(),
                    theta: [est.theta.theta1, est.theta.theta2],
                })
                .collect(),
        );
        if ci == CiArg::Wald {
            let cov = grouped_covariance(&gd, &gfit)?;
            attach_wald(&mut report, &cov.combined, &gfit.fit.beta_hat, a.level)?;
        }
    } else {
        let data = read_dataset_path(&a.data.data, read)?;
        let f = if a.theta2_zero { fit_pmle_theta2_zero(&data, opts)? } else { misclassit::fit(method, &data, opts)? };
        report = RunReport::from_fit("fit", &f, data.n(), data.n1());
        if ci == CiArg::Wald {
            let bundle = if a.theta2_zero {
                theta2_zero_covariance(&data, &f)?
            } else {
                let est = f.theta_estimate.as_ref().expect("PMLE fits carry their rate estimate");
                estimate_bundle(&data, &f.beta_hat, est)?
            };
            attach_wald(&mut report, &bundle, &f.beta_hat, a.level)?;
        }
    }
    finish_report(&mut report, start, a.common.no_timing);
    describe(&report);
    emit(&to_json(&report)?, a.common.out.as_deref())
}

fn parse_vec(text: &str, what: &str) -> Result<DVector<f64>, CliError> {
    let v: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let v = v.map_err(|_| CliError::Usage(format!("{what} must be comma-separated numbers, got '{text}'")))?;
    Ok(DVector::from_vec(v))
}

pub fn bootstrap(a: &BootstrapArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = Config::load(a.common.config.as_deref())?;
    if !(a.eta > 0.0 && a.eta < 0.5) {
        return Err(CliError::Usage(format!("--eta {} outside (0, 0.5)", a.eta)));
    }
    let bcfg = BootstrapConfig {
        b: a.b.unwrap_or(cfg.bootstrap.b),
        seed: a.seed.unwrap_or(cfg.bootstrap.seed),
        level: 1.0 - 2.0 * a.eta,
        ..cfg.bootstrap.clone()
    };
    let data = read_dataset_path(&a.data.data, read_opts(a.data.intercept, &cfg))?;
    let c = a.c.as_deref().map(|s| parse_vec(s, "--c")).transpose()?;
    let x0 = a.risk_x0.as_deref().map(|s| parse_vec(s, "--risk-x0")).transpose()?;
    let f = fit_pmle(&data, &cfg.solver)?;
    let draws = run_bootstrap_from(&data, &f, &cfg.solver, &bcfg)?;
    let mut report = RunReport::from_fit("bootstrap", &f, data.n(), data.n1());
    let level = bcfg.level;
    let p = data.p();
    let row = |target: String, estimate: f64, (lower, upper): (f64, f64)| IntervalRow {
        target,
        kind: "PERCENTILE".into(),
        level,
        estimate,
        lower,
        upper,
    };
    for j in 0..p {
        let mut e = DVector::zeros(p);
        e[j] = 1.0;
        report.intervals.push(row(format!("beta{}", j + 1), f.beta_hat[j], percentile_ci_linear(&draws, &e, a.eta)?));
    }
    if let Some(c) = &c {
        let ci = percentile_ci_linear(&draws, c, a.eta)?;
        report.intervals.push(row(format!("c'beta, c = {}", fmt_vec(c.as_slice())), c.dot(&f.beta_hat), ci));
    }
    if let Some(x0) = &x0 {
        let ci = percentile_ci_risk(&draws, x0, a.eta)?;
        report.intervals.push(row(format!("risk at x0 = {}", fmt_vec(x0.as_slice())), psi(x0.dot(&f.beta_hat)), ci));
    }
    report.bootstrap = Some(BootstrapSummary {
        b: bcfg.b,
        successes: draws.successes(),
        nonconverged: draws.count(ReplicateStatus::Nonconverged),
        degenerate: draws.count(ReplicateStatus::Degenerate),
    });
    report.seed = Some(bcfg.seed);
    finish_report(&mut report, start, a.common.no_timing);
    describe(&report);
    eprintln!("bootstrap: {} of {} replicates succeeded", draws.successes(), bcfg.b);
    emit(&to_json(&report)?, a.common.out.as_deref())
}

/// JSON sidecar of a simulation run.
#[derive(Serialize)]
struct SimulateReport<'a> {
    report_version: u32,
    software: String,
    design: &'a str,
    options: &'a DesignOptions,
    csv: String,
    rows: usize,
    timing_seconds: Option<f64>,
    results: &'a DesignResult,
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = Config::load(a.config.as_deref())?;
    let design: Design = a.design.parse()?;
    let mut opts = cfg.simulate.clone();
    if let Some(r) = a.reps {
        opts.reps = r;
    }
    if let Some(s) = a.seed {
        opts.seed = s;
    }
    if let Some(b) = a.b {
        opts.b = b;
    }
    opts.coverage.bootstrap &= !a.no_bootstrap;
    opts.bias.raw &= !a.exclude_failures;
    opts.bias.solver = cfg.solver.clone();
    opts.coverage.solver = cfg.solver.clone();
    let result = design.run(&opts)?;
    let csv_path = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", design.name())));
    let mut buf = Vec::new();
    let rows = match &result {
        DesignResult::BiasMse(_) => {
            let r = result.bias_rows();
            write_table(&r, &mut buf)?;
            r.len()
        }
        DesignResult::Coverage(_) => {
            let r = result.coverage_rows();
            write_table(&r, &mut buf)?;
            r.len()
        }
    };
    std::fs::write(&csv_path, &buf)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", csv_path.display())))?;
    let sidecar = SimulateReport {
        report_version: REPORT_VERSION,
        software: software_version(),
        design: design.name(),
        options: &opts,
        csv: csv_path.display().to_string(),
        rows,
        timing_seconds: (!a.no_timing).then(|| start.elapsed().as_secs_f64()),
        results: &result,
    };
    let json = to_json(&sidecar)?;
    let json_path = csv_path.with_extension("json");
    emit(&json, Some(&json_path))?;
    eprintln!("{}: {rows} rows written to {} (sidecar {})", design.name(), csv_path.display(), json_path.display());
    emit(&json, None)
}
