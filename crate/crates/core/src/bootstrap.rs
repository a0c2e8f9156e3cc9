//! Two-sample nonparametric bootstrap of the PMLE and percentile intervals.
//!
//! Validation and non-validation rows are resampled separately with
//! replacement, `theta` is re-estimated from the resampled validation rows and
//! the score is re-solved from the original estimate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_naive, fit_pmle, fit_pmle_with_theta, FitResult};
use crate::model::{psi, Dataset, MisclassProbs};
use crate::rng::{substream, StreamTag};
use crate::solver::SolverOptions;
use crate::theta::estimate_theta_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    /// The run fails when fewer replicates than this share succeed.
    pub min_success_fraction: f64,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { b: 700, seed: 0, min_success_fraction: 0.95, level: 0.95 }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b < 1 {
            return Err(Error::InvalidInput("bootstrap needs B >= 1".into()));
        }
        if !(self.min_success_fraction > 0.0 && self.min_success_fraction <= 1.0) {
            return Err(Error::InvalidInput("min_success_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReplicateStatus {
    Ok,
    Nonconverged,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    /// One row per successful replicate, in replicate order.
    pub beta_star: DMatrix<f64>,
    pub theta_star: DMatrix<f64>,
    /// Status of every replicate, successful or not.
    pub statuses: Vec<ReplicateStatus>,
    pub beta_hat: DVector<f64>,
    pub theta_hat: MisclassProbs,
    pub n: usize,
    pub n1: usize,
}

impl BootstrapDraws {
    pub fn successes(&self) -> usize {
        self.beta_star.nrows()
    }

    pub fn count(&self, status: ReplicateStatus) -> usize {
        self.statuses.iter().filter(|s| **s == status).count()
    }
}

/// Draws `n1` validation and `n2` non-validation rows with replacement.
pub fn resample<R1: Rng, R2: Rng>(data: &Dataset, val_rng: &mut R1, non_rng: &mut R2) -> Dataset {
    let (vi, ni) = resample_indices(data.n1(), data.n2(), val_rng, non_rng);
    data.select(&vi, &ni)
}

pub fn resample_indices<R1: Rng, R2: Rng>(
    n1: usize,
    n2: usize,
    val_rng: &mut R1,
    non_rng: &mut R2,
) -> (Vec<usize>, Vec<usize>) {
    let vi = (0..n1).map(|_| val_rng.random_range(0..n1)).collect();
    let ni = (0..n2).map(|_| non_rng.random_range(0..n2)).collect();
    (vi, ni)
}

/// The resample used by replicate `index` of a run seeded with `seed`.
pub fn replicate_resample(data: &Dataset, seed: u64, index: usize) -> Dataset {
    let mut v = substream(seed, index as u64, StreamTag::ValidationResample);
    let mut w = substream(seed, index as u64, StreamTag::NonValidationResample);
    resample(data, &mut v, &mut w)
}

enum Replicate {
    Ok(DVector<f64>, MisclassProbs),
    Failed(ReplicateStatus),
}

fn classify(e: &Error) -> ReplicateStatus {
    match e.root() {
        Error::NonConvergence { .. } | Error::SingularJacobian { .. } | Error::Domain(_) => {
            ReplicateStatus::Nonconverged
        }
        _ => ReplicateStatus::Degenerate,
    }
}

fn one_replicate(data: &Dataset, beta_hat: &DVector<f64>, opts: &SolverOptions, seed: u64, index: usize) -> Replicate {
    let star = replicate_resample(data, seed, index);
    let est = match estimate_theta_from(&star) {
        Ok(e) => e,
        Err(e) => return Replicate::Failed(classify(&e)),
    };
    let warm = opts.clone().with_start(beta_hat);
    let first = fit_pmle_with_theta(&star, est.theta, &warm);
    let fit = match first {
        Ok(f) => Ok(f),
        Err(e) if e.is_identifiability() => Err(e),
        Err(_) => {
            let cold = fit_naive(&star, opts).map(|f| opts.clone().with_start(&f.beta_hat));
            match cold {
                Ok(o) => fit_pmle_with_theta(&star, est.theta, &o),
                Err(e) => Err(e),
            }
        }
    };
    match fit {
        Ok(f) if f.beta_hat.iter().all(|v| v.is_finite()) => Replicate::Ok(f.beta_hat, est.theta),
        Ok(_) => Replicate::Failed(ReplicateStatus::Nonconverged),
        Err(e) => Replicate::Failed(classify(&e)),
    }
}

/// Fits the PMLE and bootstraps it.
pub fn run_bootstrap(data: &Dataset, opts: &SolverOptions, cfg: &BootstrapConfig) -> Result<BootstrapDraws> {
    let fit = fit_pmle(data, opts)?;
    run_bootstrap_from(data, &fit, opts, cfg)
}

/// Bootstraps around an existing PMLE fit of `data`.
pub fn run_bootstrap_from(
    data: &Dataset,
    fit: &FitResult,
    opts: &SolverOptions,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    data.require_validation()?;
    let theta_hat = fit
        .theta_hat
        .ok_or_else(|| Error::InvalidInput("bootstrap needs a fit with misclassification rates".into()))?;
    let results: Vec<Replicate> =
        (0..cfg.b).into_par_iter().map(|i| one_replicate(data, &fit.beta_hat, opts, cfg.seed, i)).collect();
    let p = data.p();
    let mut statuses = Vec::with_capacity(cfg.b);
    let mut betas = Vec::new();
    let mut thetas = Vec::new();
    for r in results {
        match r {
            Replicate::Ok(b, t) => {
                statuses.push(ReplicateStatus::Ok);
                betas.extend_from_slice(b.as_slice());
                thetas.push(t.theta1);
                thetas.push(t.theta2);
            }
            Replicate::Failed(s) => statuses.push(s),
        }
    }
    let ok = betas.len() / p;
    if (ok as f64) < cfg.min_success_fraction * cfg.b as f64 {
        return Err(Error::InsufficientSuccesses { ok, total: cfg.b, required: cfg.min_success_fraction });
    }
    Ok(BootstrapDraws {
        beta_star: DMatrix::from_row_slice(ok, p, &betas),
        theta_star: DMatrix::from_row_slice(ok, 2, &thetas),
        statuses,
        beta_hat: fit.beta_hat.clone(),
        theta_hat,
        n: data.n(),
        n1: data.n1(),
    })
}

/// The `k`-th order statistic with `k = clamp(ceil(eta m), 1, m)`.
///
/// A tiny allowance keeps `eta m` that lands on an integer up to rounding
/// from jumping to the next index.
pub fn percentile_quantile(sorted: &[f64], eta: f64) -> Result<f64> {
    let m = sorted.len();
    if m == 0 {
        return Err(Error::InvalidInput("no draws to take a quantile of".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidInput(format!("quantile level {eta} outside (0, 1)")));
    }
    let k = ((eta * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    Ok(sorted[k - 1])
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidInput(format!("eta {eta} outside (0, 1/2)")));
    }
    Ok(())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn need_draws(draws: &BootstrapDraws) -> Result<()> {
    if draws.successes() == 0 {
        return Err(Error::InsufficientSuccesses { ok: 0, total: draws.statuses.len(), required: 0.0 });
    }
    Ok(())
}

/// Percentile interval for `c'beta` with nominal level `1 - 2 eta`.
pub fn percentile_ci_linear(draws: &BootstrapDraws, c: &DVector<f64>, eta: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    need_draws(draws)?;
    let p = draws.beta_hat.len();
    if c.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: c.len() });
    }
    if c.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("linear functional must be non-zero".into()));
    }
    let rn = (draws.n as f64).sqrt();
    let centre = c.dot(&draws.beta_hat);
    let stats = sorted(draws.beta_star.row_iter().map(|r| rn * (r.transpose().dot(c) - centre)).collect());
    let hi = percentile_quantile(&stats, 1.0 - eta)?;
    let lo = percentile_quantile(&stats, eta)?;
    Ok((centre - hi / rn, centre - lo / rn))
}

/// Percentile interval for the risk `psi(x0'beta)`, clipped to `[0, 1]`.
pub fn percentile_ci_risk(draws: &BootstrapDraws, x0: &DVector<f64>, eta: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    need_draws(draws)?;
    let p = draws.beta_hat.len();
    if x0.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: x0.len() });
    }
    if x0.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("risk profile x0 must be non-zero".into()));
    }
    let rn = (draws.n as f64).sqrt();
    let centre = psi(x0.dot(&draws.beta_hat));
    let stats = sorted(draws.beta_star.row_iter().map(|r| rn * (psi(r.transpose().dot(x0)) - centre)).collect());
    let hi = percentile_quantile(&stats, 1.0 - eta)?;
    let lo = percentile_quantile(&stats, eta)?;
    Ok(((centre - hi / rn).clamp(0.0, 1.0), (centre - lo / rn).clamp(0.0, 1.0)))
}
