//! Simulation designs and Monte Carlo studies of bias, MSE and interval coverage.
//!
//! Replicate `r` of a study draws its data from the stream
//! `(seed, r, DataGeneration)` and seeds any nested bootstrap with
//! `derive_seed(seed, r, NestedBootstrap)`, so summaries do not depend on the
//! number of threads.

use nalgebra::DVector;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{percentile_ci_linear, run_bootstrap_from, BootstrapConfig};
use crate::error::{Error, Result};
use crate::estimators::{fit, fit_pmle, Method};
use crate::inference::{estimate_bundle, wald_ci};
use crate::model::{dot, psi, Dataset, MisclassProbs};
use crate::normal;
use crate::rng::{derive_seed, substream, StreamTag};
use crate::solver::SolverOptions;
use crate::theta::estimate_theta_from;

/// Upper end of the admissible range for the share `eta` of moderate probabilities.
pub const ETA_MAX: f64 = 0.97;

/// Estimates with a misclassification rate beyond this are treated as failures
/// when raw aggregation is off.
pub const THETA_FAILURE_BOUND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelName {
    ModelA,
    ModelB,
    ModelC,
    P9,
    EtaDesign,
    Custom,
}

/// Distribution family of one covariate (or a correlated pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Covariate {
    Intercept,
    Normal {
        mean: f64,
        sd: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Bernoulli {
        p: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Two standard normal columns with correlation `rho`.
    BivariateNormal {
        rho: f64,
    },
    Poisson {
        lambda: f64,
    },
    ChiSquared {
        df: f64,
    },
    /// `weight N(mean1, sd1^2) + (1 - weight) N(mean2, sd2^2)`.
    NormalMixture {
        weight: f64,
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
    },
}

impl Covariate {
    /// Number of design-matrix columns produced.
    pub fn width(&self) -> usize {
        match self {
            Covariate::BivariateNormal { .. } => 2,
            _ => 1,
        }
    }

    /// Population mean of each produced column.
    pub fn means(&self) -> Vec<f64> {
        match *self {
            Covariate::Intercept => vec![1.0],
            Covariate::Normal { mean, .. } => vec![mean],
            Covariate::LogNormal { mu, sigma } => vec![(mu + 0.5 * sigma * sigma).exp()],
            Covariate::Bernoulli { p } => vec![p],
            Covariate::Uniform { low, high } => vec![0.5 * (low + high)],
            Covariate::BivariateNormal { .. } => vec![0.0, 0.0],
            Covariate::Poisson { lambda } => vec![lambda],
            Covariate::ChiSquared { df } => vec![df],
            Covariate::NormalMixture { weight, mean1, mean2, .. } => vec![weight * mean1 + (1.0 - weight) * mean2],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Covariate::Intercept => true,
            Covariate::Normal { mean, sd } => mean.is_finite() && sd >= 0.0 && sd.is_finite(),
            Covariate::LogNormal { mu, sigma } => mu.is_finite() && sigma >= 0.0 && sigma.is_finite(),
            Covariate::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Covariate::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Covariate::BivariateNormal { rho } => (-1.0..=1.0).contains(&rho),
            Covariate::Poisson { lambda } => lambda > 0.0 && lambda.is_finite(),
            Covariate::ChiSquared { df } => df > 0.0 && df.is_finite(),
            Covariate::NormalMixture { weight, mean1, sd1, mean2, sd2 } => {
                (0.0..=1.0).contains(&weight)
                    && [mean1, sd1, mean2, sd2].iter().all(|v| v.is_finite())
                    && sd1 >= 0.0
                    && sd2 >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid covariate parameters: {self:?}")))
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match *self {
            Covariate::Intercept => out.push(1.0),
            Covariate::Normal { mean, sd } => out.push(mean + sd * std_normal(rng)),
            Covariate::LogNormal { mu, sigma } => out.push((mu + sigma * std_normal(rng)).exp()),
            Covariate::Bernoulli { p } => out.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 }),
            Covariate::Uniform { low, high } => out.push(low + (high - low) * rng.random::<f64>()),
            Covariate::BivariateNormal { rho } => {
                let z1 = std_normal(rng);
                let z2 = std_normal(rng);
                out.push(z1);
                out.push(rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            }
            Covariate::Poisson { lambda } => out.push(Poisson::new(lambda).expect("validated").sample(rng)),
            Covariate::ChiSquared { df } => out.push(ChiSquared::new(df).expect("validated").sample(rng)),
            Covariate::NormalMixture { weight, mean1, sd1, mean2, sd2 } => {
                let first = rng.random::<f64>() < weight;
                let z = std_normal(rng);
                out.push(if first { mean1 + sd1 * z } else { mean2 + sd2 * z });
            }
        }
    }
}

/// Standard normal draw by inverting the cdf at an open-interval uniform.
fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    normal::quantile(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub family: Covariate,
    /// Subtract the population mean.
    #[serde(default)]
    pub centered: bool,
}

impl CovariateSpec {
    pub fn raw(family: Covariate) -> Self {
        Self { family, centered: false }
    }

    pub fn centered(family: Covariate) -> Self {
        Self { family, centered: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimModel {
    pub name: ModelName,
    pub beta0: Vec<f64>,
    pub theta0: MisclassProbs,
    pub covariates: Vec<CovariateSpec>,
}

fn hausman_covariates() -> Vec<CovariateSpec> {
    vec![
        CovariateSpec::raw(Covariate::Intercept),
        CovariateSpec::centered(Covariate::LogNormal { mu: 0.0, sigma: 1.0 }),
        CovariateSpec::centered(Covariate::Bernoulli { p: 1.0 / 3.0 }),
        CovariateSpec::centered(Covariate::Uniform { low: 0.0, high: 1.0 }),
    ]
}

impl SimModel {
    /// Intercept plus centred log-normal, Bernoulli and uniform covariates.
    pub fn model_a() -> Self {
        Self {
            name: ModelName::ModelA,
            beta0: vec![0.0, 0.7, 1.5, -0.6],
            theta0: MisclassProbs::new(0.1, 0.3),
            covariates: hausman_covariates(),
        }
    }

    /// Model (a) with symmetric misclassification.
    pub fn model_b() -> Self {
        Self { name: ModelName::ModelB, theta0: MisclassProbs::new(0.1, 0.1), ..Self::model_a() }
    }

    /// Model (a) with intercept -1.
    pub fn model_c() -> Self {
        Self { name: ModelName::ModelC, beta0: vec![-1.0, 0.7, 1.5, -0.6], ..Self::model_a() }
    }

    /// Nine coefficients over a mix of continuous, discrete and categorical covariates.
    ///
    /// The misclassification rates are not stated for this design; those of
    /// model (a) are used.
    pub fn p9() -> Self {
        let mut covariates = hausman_covariates();
        covariates.extend([
            CovariateSpec::centered(Covariate::BivariateNormal { rho: 0.6 }),
            CovariateSpec::centered(Covariate::Poisson { lambda: 3.0 }),
            CovariateSpec::centered(Covariate::ChiSquared { df: 2.0 }),
            CovariateSpec::centered(Covariate::NormalMixture {
                weight: 0.6,
                mean1: -1.0,
                sd1: 1.0,
                mean2: 4.0,
                sd2: 2f64.sqrt(),
            }),
        ]);
        Self {
            name: ModelName::P9,
            beta0: vec![-1.0, 0.7, 1.5, -0.6, 1.0, -0.75, -2.0, -1.5, 1.0],
            theta0: MisclassProbs::new(0.1, 0.3),
            covariates,
        }
    }

    /// No intercept, `X1 ~ N(0, 1)`, `X2 ~ N(0, sigma(eta)^2)`, `beta = (1, 2)`.
    pub fn eta_design(eta: f64) -> Result<Self> {
        let sd = sigma_of_eta(eta)?;
        Ok(Self {
            name: ModelName::EtaDesign,
            beta0: vec![1.0, 2.0],
            theta0: MisclassProbs::new(0.1, 0.3),
            covariates: vec![
                CovariateSpec::raw(Covariate::Normal { mean: 0.0, sd: 1.0 }),
                CovariateSpec::raw(Covariate::Normal { mean: 0.0, sd }),
            ],
        })
    }

    pub fn p(&self) -> usize {
        self.covariates.iter().map(|c| c.family.width()).sum()
    }

    /// Whether the first column is a constant one.
    pub fn has_intercept(&self) -> bool {
        matches!(self.covariates.first(), Some(CovariateSpec { family: Covariate::Intercept, .. }))
    }

    pub fn validate(&self) -> Result<()> {
        if self.covariates.is_empty() {
            return Err(Error::InvalidInput("model has no covariates".into()));
        }
        if self.p() != self.beta0.len() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: self.beta0.len() });
        }
        if self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("beta0 must be finite".into()));
        }
        for (i, c) in self.covariates.iter().enumerate() {
            c.family.validate()?;
            if i > 0 && c.family == Covariate::Intercept {
                return Err(Error::InvalidInput("an intercept may only be the first covariate".into()));
            }
        }
        if self.has_intercept() && self.covariates[0].centered {
            return Err(Error::InvalidInput("the intercept cannot be centred".into()));
        }
        self.theta0.check_unit_square()
    }

    /// One covariate row.
    pub fn draw_x<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.p());
        for c in &self.covariates {
            let start = x.len();
            c.family.draw(rng, &mut x);
            if c.centered {
                for (v, m) in x[start..].iter_mut().zip(c.family.means()) {
                    *v -= m;
                }
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    /// Validation fraction; `n1 = round(n f_n)`.
    pub f_n: f64,
    pub reps: usize,
    pub seed: u64,
    /// Bootstrap resamples per replicate for the coverage study.
    #[serde(rename = "B")]
    pub b: usize,
    pub level: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n: 300, f_n: 0.2, reps: 250, seed: 0, b: 700, level: 0.95 }
    }
}

impl SimConfig {
    pub fn n1(&self) -> usize {
        (self.n as f64 * self.f_n).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_n > 0.0 && self.f_n <= 1.0) {
            return Err(Error::InvalidInput(format!("f_n = {} outside (0, 1]", self.f_n)));
        }
        let n1 = self.n1();
        if n1 < 1 || n1 > self.n {
            return Err(Error::InvalidInput(format!("n = {} and f_n = {} give n1 = {n1}", self.n, self.f_n)));
        }
        if self.reps < 1 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidInput(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }
}

/// Standard deviation of `X2` in the eta design, chosen so that
/// `P(0.1 < psi(X1 + 2 X2) < 0.9) = eta`.
pub fn sigma_of_eta(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < ETA_MAX) {
        return Err(Error::Domain(format!("eta = {eta} outside (0, {ETA_MAX})")));
    }
    let q = normal::quantile(0.5 * (1.0 + eta));
    let var = 0.25 * (9f64.ln().powi(2) / (q * q) - 1.0);
    if var <= 0.0 {
        return Err(Error::Domain(format!("eta = {eta} gives a non-positive variance")));
    }
    Ok(var.sqrt())
}

/// Draws `n` rows from `model`; the first `n1` are the validation sample.
pub fn generate_dataset<R: Rng>(model: &SimModel, cfg: &SimConfig, rng: &mut R) -> Result<Dataset> {
    model.validate()?;
    cfg.validate()?;
    let p = model.p();
    let n1 = cfg.n1();
    let beta = DVector::from_column_slice(&model.beta0);
    let (t1, t2) = (model.theta0.theta1, model.theta0.theta2);
    let mut val_x = Vec::with_capacity(n1 * p);
    let mut val_y = Vec::with_capacity(n1);
    let mut val_yt = Vec::with_capacity(n1);
    let mut non_x = Vec::with_capacity((cfg.n - n1) * p);
    let mut non_yt = Vec::with_capacity(cfg.n - n1);
    for i in 0..cfg.n {
        let x = model.draw_x(rng);
        let y = rng.random::<f64>() < psi(dot(&x, &beta));
        let flip = rng.random::<f64>() < if y { t2 } else { t1 };
        let ytilde = y != flip;
        if i < n1 {
            val_x.extend_from_slice(&x);
            val_y.push(y);
            val_yt.push(ytilde);
        } else {
            non_x.extend_from_slice(&x);
            non_yt.push(ytilde);
        }
    }
    Dataset::from_columns(p, model.has_intercept(), val_x, val_y, val_yt, non_x, non_yt)
}

/// The dataset of replicate `index` of a study seeded with `cfg.seed`.
pub fn replicate_dataset(model: &SimModel, cfg: &SimConfig, index: usize) -> Result<Dataset> {
    let mut rng = substream(cfg.seed, index as u64, StreamTag::DataGeneration);
    generate_dataset(model, cfg, &mut rng)
}

/// Mean, population variance, bias and MSE of a set of estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub bias: f64,
    /// `variance + bias^2`, the mean squared deviation from the truth.
    pub mse: f64,
    pub count: usize,
}

/// Summary of `values` around `truth`; `None` when there are no values.
pub fn aggregate(values: &[f64], truth: f64) -> Option<Moments> {
    if values.is_empty() {
        return None;
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    let bias = mean - truth;
    Some(Moments { mean, variance, bias, mse: variance + bias * bias, count: values.len() })
}

/// Outcome of one fit within one replicate.
#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    /// `beta` followed by `(theta1, theta2)` when the method estimates them.
    Converged(Vec<f64>),
    /// The solver gave up; the last iterate in the same layout.
    Unconverged(Vec<f64>),
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasMseOptions {
    pub methods: Vec<Method>,
    /// Aggregate every available estimate, including last iterates of runs
    /// that did not converge. When off, non-converged runs and estimates with
    /// a misclassification rate beyond `THETA_FAILURE_BOUND` are dropped.
    pub raw: bool,
    pub solver: SolverOptions,
}

impl Default for BiasMseOptions {
    fn default() -> Self {
        Self { methods: Method::ALL.to_vec(), raw: true, solver: SolverOptions::default() }
    }
}

fn run_method(method: Method, data: &Dataset, opts: &SolverOptions) -> FitOutcome {
    let p = data.p();
    let pack = |beta: &[f64], theta: Option<MisclassProbs>| {
        let mut v = beta.to_vec();
        if let Some(t) = theta {
            v.extend([t.theta1, t.theta2]);
        }
        v
    };
    match fit(method, data, opts) {
        Ok(f) => FitOutcome::Converged(pack(f.beta_hat.as_slice(), f.theta_hat)),
        Err(e) => match e.root() {
            Error::NonConvergence { last, .. } if !last.is_empty() => match method {
                Method::Naive => FitOutcome::Unconverged(last[..p].to_vec()),
                Method::Jmle | Method::Cmle => FitOutcome::Unconverged(last.clone()),
                Method::Pmle => match estimate_theta_from(data) {
                    Ok(est) => FitOutcome::Unconverged(pack(&last[..p], Some(est.theta))),
                    Err(_) => FitOutcome::Failed,
                },
            },
            _ => FitOutcome::Failed,
        },
    }
}

/// Per-method failure accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub unconverged: usize,
    /// Errors that left no estimate at all.
    pub failed: usize,
    /// Estimates dropped by the non-raw filter.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    /// `beta1..betap`, `theta1`, `theta2` (1-based, intercept first).
    pub parameter: String,
    pub truth: f64,
    pub moments: Option<Moments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub parameters: Vec<ParameterSummary>,
    pub failures: FailureCounts,
    /// Every replicate's estimate that entered the aggregates, in replicate order.
    #[serde(skip)]
    pub estimates: Vec<Vec<f64>>,
    /// Whether each entry of `estimates` comes from a converged fit.
    #[serde(skip)]
    pub converged: Vec<bool>,
}

impl MethodSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.parameter == name)
    }
}

/// Parameter names in the order used by `FitOutcome`.
pub fn parameter_names(p: usize, with_theta: bool) -> Vec<String> {
    let mut v: Vec<String> = (1..=p).map(|j| format!("beta{j}")).collect();
    if with_theta {
        v.extend(["theta1".to_string(), "theta2".to_string()]);
    }
    v
}

fn summarize_method(method: Method, model: &SimModel, outcomes: &[FitOutcome], raw: bool) -> MethodSummary {
    let p = model.p();
    let with_theta = method != Method::Naive;
    let mut failures = FailureCounts::default();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut converged = Vec::new();
    for o in outcomes {
        match o {
            FitOutcome::Converged(v) => {
                if !raw && v[p..].iter().any(|t| t.abs() > THETA_FAILURE_BOUND) {
                    failures.excluded += 1;
                } else {
                    kept.push(v.clone());
                    converged.push(true);
                }
            }
            FitOutcome::Unconverged(v) => {
                failures.unconverged += 1;
                if raw {
                    kept.push(v.clone());
                    converged.push(false);
                } else {
                    failures.excluded += 1;
                }
            }
            FitOutcome::Failed => failures.failed += 1,
        }
    }
    let mut truth = model.beta0.clone();
    truth.extend([model.theta0.theta1, model.theta0.theta2]);
    let parameters = parameter_names(p, with_theta)
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = kept.iter().map(|v| v[j]).collect();
            ParameterSummary { parameter: name, truth: truth[j], moments: aggregate(&col, truth[j]) }
        })
        .collect();
    MethodSummary { method, parameters, failures, estimates: kept, converged }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMseSummary {
    pub model: SimModel,
    pub config: SimConfig,
    pub n1: usize,
    /// Present for points of the eta design.
    pub eta: Option<f64>,
    pub methods: Vec<MethodSummary>,
}

impl BiasMseSummary {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

/// Bias and MSE of every method over `cfg.reps` datasets from `model`.
pub fn run_bias_mse(model: &SimModel, cfg: &SimConfig, opts: &BiasMseOptions) -> Result<BiasMseSummary> {
    model.validate()?;
    cfg.validate()?;
    opts.solver.validate()?;
    if opts.methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    let per_rep: Vec<Vec<FitOutcome>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let data = replicate_dataset(model, cfg, r)?;
            Ok(opts.methods.iter().map(|m| run_method(*m, &data, &opts.solver)).collect())
        })
        .collect::<Result<_>>()?;
    let methods = opts
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let col: Vec<FitOutcome> = per_rep.iter().map(|r| r[k].clone()).collect();
            summarize_method(*m, model, &col, opts.raw)
        })
        .collect();
    Ok(BiasMseSummary { model: model.clone(), config: cfg.clone(), n1: cfg.n1(), eta: None, methods })
}

/// The eta-design study at each point of `etas`.
///
/// Every grid point reuses the same replicate streams, so differences across
/// the grid are not blurred by independent sampling noise.
pub fn run_bias_mse_study(etas: &[f64], cfg: &SimConfig, opts: &BiasMseOptions) -> Result<Vec<BiasMseSummary>> {
    etas.iter()
        .map(|&eta| {
            let model = SimModel::eta_design(eta)?;
            let mut s = run_bias_mse(&model, cfg, opts)?;
            s.eta = Some(eta);
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CiKind {
    Asymptotic,
    Bootstrap,
}

impl CiKind {
    pub fn name(&self) -> &'static str {
        match self {
            CiKind::Asymptotic => "ASYMPTOTIC",
            CiKind::Bootstrap => "BOOTSTRAP",
        }
    }
}

/// Share of intervals containing `truth` and their mean length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageStat {
    pub coverage: f64,
    pub avg_length: f64,
    pub count: usize,
}

/// Coverage of closed intervals; `None` for an empty set.
pub fn coverage_of(intervals: &[(f64, f64)], truth: f64) -> Option<CoverageStat> {
    if intervals.is_empty() {
        return None;
    }
    let m = intervals.len() as f64;
    let hits = intervals.iter().filter(|(lo, hi)| *lo <= truth && truth <= *hi).count();
    let len = intervals.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / m;
    Some(CoverageStat { coverage: hits as f64 / m, avg_length: len, count: intervals.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub parameter: String,
    pub kind: CiKind,
    pub truth: f64,
    pub stat: Option<CoverageStat>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageFailures {
    /// Replicates whose point estimate failed; no interval of either kind.
    pub fit: usize,
    pub asymptotic: usize,
    pub bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageOptions {
    /// Build bootstrap percentile intervals as well as asymptotic ones.
    pub bootstrap: bool,
    /// Success floor for each nested bootstrap run.
    pub min_success_fraction: f64,
    pub solver: SolverOptions,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self { bootstrap: true, min_success_fraction: 0.5, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub model: SimModel,
    pub config: SimConfig,
    pub n1: usize,
    pub intervals: Vec<IntervalSummary>,
    pub failures: CoverageFailures,
}

impl CoverageSummary {
    pub fn get(&self, parameter: &str, kind: CiKind) -> Option<&IntervalSummary> {
        self.intervals.iter().find(|s| s.parameter == parameter && s.kind == kind)
    }
}

struct CoverageReplicate {
    asymptotic: Option<Vec<(f64, f64)>>,
    bootstrap: Option<Vec<(f64, f64)>>,
    fitted: bool,
}

fn coverage_replicate(
    model: &SimModel,
    cfg: &SimConfig,
    opts: &CoverageOptions,
    r: usize,
) -> Result<CoverageReplicate> {
    let data = replicate_dataset(model, cfg, r)?;
    let fit = match fit_pmle(&data, &opts.solver) {
        Ok(f) => f,
        Err(_) => return Ok(CoverageReplicate { asymptotic: None, bootstrap: None, fitted: false }),
    };
    let est = fit.theta_estimate.as_ref().expect("the PMLE carries its theta estimate");
    let asymptotic =
        estimate_bundle(&data, &fit.beta_hat, est).and_then(|b| wald_ci(&b, &fit.beta_hat, cfg.level)).ok();
    let bootstrap = if opts.bootstrap {
        let bcfg = BootstrapConfig {
            b: cfg.b,
            seed: derive_seed(cfg.seed, r as u64, StreamTag::NestedBootstrap),
            min_success_fraction: opts.min_success_fraction,
            level: cfg.level,
        };
        let eta = 0.5 * (1.0 - cfg.level);
        run_bootstrap_from(&data, &fit, &opts.solver, &bcfg).ok().and_then(|draws| {
            (0..data.p())
                .map(|j| {
                    let mut c = DVector::zeros(data.p());
                    c[j] = 1.0;
                    percentile_ci_linear(&draws, &c, eta)
                })
                .collect::<Result<Vec<_>>>()
                .ok()
        })
    } else {
        None
    };
    Ok(CoverageReplicate { asymptotic, bootstrap, fitted: true })
}

/// Coverage and mean length of the asymptotic and bootstrap intervals for
/// every coefficient of `model`.
pub fn run_coverage_study(model: &SimModel, cfg: &SimConfig, opts: &CoverageOptions) -> Result<CoverageSummary> {
    model.validate()?;
    cfg.validate()?;
    opts.solver.validate()?;
    if opts.bootstrap && cfg.b < 1 {
        return Err(Error::InvalidInput("bootstrap intervals need B >= 1".into()));
    }
    let reps: Vec<CoverageReplicate> =
        (0..cfg.reps).into_par_iter().map(|r| coverage_replicate(model, cfg, opts, r)).collect::<Result<_>>()?;
    let mut failures = CoverageFailures::default();
    for r in &reps {
        if !r.fitted {
            failures.fit += 1;
            continue;
        }
        failures.asymptotic += r.asymptotic.is_none() as usize;
        failures.bootstrap += (opts.bootstrap && r.bootstrap.is_none()) as usize;
    }
    let mut kinds = vec![CiKind::Asymptotic];
    if opts.bootstrap {
        kinds.push(CiKind::Bootstrap);
    }
    let mut intervals = Vec::new();
    for (j, name) in parameter_names(model.p(), false).into_iter().enumerate() {
        for &kind in &kinds {
            let cis: Vec<(f64, f64)> = reps
                .iter()
                .filter_map(|r| match kind {
                    CiKind::Asymptotic => r.asymptotic.as_ref(),
                    CiKind::Bootstrap => r.bootstrap.as_ref(),
                })
                .map(|v| v[j])
                .collect();
            let truth = model.beta0[j];
            intervals.push(IntervalSummary { parameter: name.clone(), kind, truth, stat: coverage_of(&cis, truth) });
        }
    }
    Ok(CoverageSummary { model: model.clone(), config: cfg.clone(), n1: cfg.n1(), intervals, failures })
}

/// The published simulation layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
}

impl std::str::FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Design::Table1),
            "table2" => Ok(Design::Table2),
            "table3" => Ok(Design::Table3),
            "table4" => Ok(Design::Table4),
            "table5" => Ok(Design::Table5),
            _ => Err(Error::InvalidInput(format!("unknown design '{s}'"))),
        }
    }
}

/// Grid of `eta` values in the bias/MSE design.
pub const ETA_GRID: [f64; 4] = [0.6, 0.7, 0.8, 0.9];

/// Validation fractions of the coverage designs.
pub const VALIDATION_FRACTIONS: [f64; 3] = [0.1, 0.2, 0.3];

/// Knobs shared by all designs; the sample sizes come from the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignOptions {
    pub reps: usize,
    pub seed: u64,
    #[serde(rename = "B")]
    pub b: usize,
    pub level: f64,
    pub bias: BiasMseOptions,
    pub coverage: CoverageOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            reps: 250,
            seed: 0,
            b: 700,
            level: 0.95,
            bias: BiasMseOptions::default(),
            coverage: CoverageOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "results", rename_all = "snake_case")]
pub enum DesignResult {
    BiasMse(Vec<BiasMseSummary>),
    Coverage(Vec<CoverageSummary>),
}

/// One line of the bias/MSE table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMseRow {
    pub model: ModelName,
    pub eta: Option<f64>,
    pub sigma: Option<f64>,
    pub n: usize,
    pub n1: usize,
    pub method: Method,
    pub parameter: String,
    pub truth: f64,
    pub bias: Option<f64>,
    pub mse: Option<f64>,
    pub variance: Option<f64>,
    pub used: usize,
    pub unconverged: usize,
    pub failed: usize,
    pub excluded: usize,
}

/// One line of the coverage table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub model: ModelName,
    pub n: usize,
    pub n1: usize,
    pub parameter: String,
    pub interval: CiKind,
    pub truth: f64,
    pub coverage: Option<f64>,
    pub avg_length: Option<f64>,
    pub used: usize,
}

impl DesignResult {
    pub fn bias_rows(&self) -> Vec<BiasMseRow> {
        let DesignResult::BiasMse(v) = self else { return Vec::new() };
        let mut rows = Vec::new();
        for s in v {
            let sigma = s.eta.and_then(|e| sigma_of_eta(e).ok());
            for m in &s.methods {
                for p in &m.parameters {
                    rows.push(BiasMseRow {
                        model: s.model.name,
                        eta: s.eta,
                        sigma,
                        n: s.config.n,
                        n1: s.n1,
                        method: m.method,
                        parameter: p.parameter.clone(),
                        truth: p.truth,
                        bias: p.moments.map(|x| x.bias),
                        mse: p.moments.map(|x| x.mse),
                        variance: p.moments.map(|x| x.variance),
                        used: p.moments.map_or(0, |x| x.count),
                        unconverged: m.failures.unconverged,
                        failed: m.failures.failed,
                        excluded: m.failures.excluded,
                    });
                }
            }
        }
        rows
    }

    pub fn coverage_rows(&self) -> Vec<CoverageRow> {
        let DesignResult::Coverage(v) = self else { return Vec::new() };
        let mut rows = Vec::new();
        for s in v {
            for i in &s.intervals {
                rows.push(CoverageRow {
                    model: s.model.name,
                    n: s.config.n,
                    n1: s.n1,
                    parameter: i.parameter.clone(),
                    interval: i.kind,
                    truth: i.truth,
                    coverage: i.stat.map(|x| x.coverage),
                    avg_length: i.stat.map(|x| x.avg_length),
                    used: i.stat.map_or(0, |x| x.count),
                });
            }
        }
        rows
    }
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::Table1 => "table1",
            Design::Table2 => "table2",
            Design::Table3 => "table3",
            Design::Table4 => "table4",
            Design::Table5 => "table5",
        }
    }

    /// Runs the whole layout.
    pub fn run(&self, opts: &DesignOptions) -> Result<DesignResult> {
        let cfg =
            |n: usize, f_n: f64| SimConfig { n, f_n, reps: opts.reps, seed: opts.seed, b: opts.b, level: opts.level };
        let abc = [SimModel::model_a(), SimModel::model_b(), SimModel::model_c()];
        let coverage = |models: &[SimModel], n: usize| -> Result<DesignResult> {
            let mut out = Vec::new();
            for m in models {
                for f in VALIDATION_FRACTIONS {
                    out.push(run_coverage_study(m, &cfg(n, f), &opts.coverage)?);
                }
            }
            Ok(DesignResult::Coverage(out))
        };
        match self {
            Design::Table1 => coverage(&abc, 300),
            Design::Table2 => coverage(&abc, 600),
            Design::Table3 => coverage(&abc, 1000),
            Design::Table4 => coverage(&[SimModel::p9()], 1000),
            Design::Table5 => Ok(DesignResult::BiasMse(run_bias_mse_study(&ETA_GRID, &cfg(300, 0.2), &opts.bias)?)),
        }
    }
}
