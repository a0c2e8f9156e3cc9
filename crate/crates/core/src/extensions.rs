//! Group-dependent misclassification and the one-sided (`theta2 = 0`) variant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{fit_naive, FitResult, FitWarning, Method};
use crate::inference::{
    assemble, bundle_with, moments, sandwich, symmetrize, theta_plugins, CovarianceBundle, ThetaMode,
};
use crate::model::{dot, Dataset, MisclassProbs, PseudoLikelihood};
use crate::solver::{newton_root, RootSystem, SolverOptions};
use crate::theta::{estimate_theta_from, ThetaEstimate};

/// Bound on `|x'beta|` under which the one-sided variant's theory applies.
pub const ONE_SIDED_PREDICTOR_BOUND: f64 = 30.0;

/// Rows partitioned into known groups, each with its own misclassification rates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    groups: Vec<Dataset>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Dataset>) -> Result<Self> {
        let first = groups.first().ok_or_else(|| Error::InvalidInput("no groups".into()))?;
        for (k, g) in groups.iter().enumerate() {
            if g.p() != first.p() || g.has_intercept() != first.has_intercept() {
                return Err(Error::InGroup {
                    group: k,
                    source: Box::new(Error::DimensionMismatch { expected: first.p(), got: g.p() }),
                });
            }
            if g.n1() == 0 {
                return Err(Error::InGroup {
                    group: k,
                    source: Box::new(Error::InvalidInput("group has no validation rows".into())),
                });
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Dataset] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.groups[0].p()
    }

    pub fn n(&self) -> usize {
        self.groups.iter().map(Dataset::n).sum()
    }

    /// Share of all rows falling in each group.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.groups.iter().map(|g| g.n() as f64 / n).collect()
    }

    pub fn pooled(&self) -> Dataset {
        Dataset::concat(&self.groups).expect("groups share a dimension")
    }
}

fn in_group<T>(k: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::InGroup { group: k, source: Box::new(e) })
}

struct GroupedSystem<'a> {
    liks: Vec<PseudoLikelihood<'a>>,
    weights: Vec<f64>,
}

impl RootSystem for GroupedSystem<'_> {
    fn residual(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(beta.len());
        for (k, (lik, w)) in self.liks.iter().zip(&self.weights).enumerate() {
            out += in_group(k, lik.score(beta))? * *w;
        }
        Ok(out)
    }
    fn jacobian(&self, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(beta.len(), beta.len());
        for (k, (lik, w)) in self.liks.iter().zip(&self.weights).enumerate() {
            out += in_group(k, lik.jacobian(beta))? * *w;
        }
        Ok(out)
    }
}

/// The grouped score `sum_k (n_k / n) Z^{(k)}(beta)` with per-group rates.
pub fn grouped_score(gd: &GroupedDataset, beta: &DVector<f64>, thetas: &[MisclassProbs]) -> Result<DVector<f64>> {
    if thetas.len() != gd.k() {
        return Err(Error::DimensionMismatch { expected: gd.k(), got: thetas.len() });
    }
    let sys = GroupedSystem {
        liks: gd.groups.iter().zip(thetas).map(|(g, t)| PseudoLikelihood::new(g, *t)).collect(),
        weights: gd.weights(),
    };
    sys.residual(beta)
}

/// A grouped PMLE fit with each group's rate estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedFit {
    pub fit: FitResult,
    pub theta_estimates: Vec<ThetaEstimate>,
}

/// PMLE with group-specific misclassification rates and a shared `beta`.
pub fn fit_pmle_grouped(gd: &GroupedDataset, opts: &SolverOptions) -> Result<GroupedFit> {
    opts.validate()?;
    let mut ests = Vec::with_capacity(gd.k());
    for (k, g) in gd.groups.iter().enumerate() {
        let e = in_group(k, estimate_theta_from(g))?;
        in_group(k, e.theta.check_identifiable(opts.ident_tol))?;
        ests.push(e);
    }
    let start = match &opts.start {
        Some(s) => DVector::from_column_slice(s),
        None => {
            let pooled = gd.pooled();
            fit_naive(&pooled, opts).map(|f| f.beta_hat).unwrap_or_else(|_| DVector::zeros(gd.p()))
        }
    };
    gd.groups[0].check_beta(&start)?;
    let sys = GroupedSystem {
        liks: gd
            .groups
            .iter()
            .zip(&ests)
            .map(|(g, e)| PseudoLikelihood::new(g, e.theta).with_ident_tol(opts.ident_tol))
            .collect(),
        weights: gd.weights(),
    };
    let (beta, diag) = newton_root(&sys, &start, opts)?;
    let norm = sys.residual(&beta)?.amax();
    let mut warnings = Vec::new();
    if diag.step_cap_hit {
        warnings.push(FitWarning::StepCapHit);
    }
    let fit = FitResult {
        method: Method::Pmle,
        beta_hat: beta,
        theta_hat: if gd.k() == 1 { Some(ests[0].theta) } else { None },
        theta_estimate: if gd.k() == 1 { Some(ests[0]) } else { None },
        converged: true,
        iterations: diag.iterations,
        final_score_norm: norm,
        warnings,
    };
    Ok(GroupedFit { fit, theta_estimates: ests })
}

/// Combined and per-group covariance of a grouped fit.
///
/// `combined.beta_cov` is the grouped sandwich. Its `sigma0`, `zdot`,
/// `sigma11` and `gamma` are the row-share weighted sums of the group
/// matrices; the theta-related factors (`a0`, `b0`, `sigma21`, `sigma22`) are
/// only meaningful per group and are likewise weighted averages there.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedCovariance {
    pub combined: CovarianceBundle,
    pub groups: Vec<CovarianceBundle>,
}

pub fn grouped_covariance(gd: &GroupedDataset, fit: &GroupedFit) -> Result<GroupedCovariance> {
    if fit.theta_estimates.len() != gd.k() {
        return Err(Error::DimensionMismatch { expected: gd.k(), got: fit.theta_estimates.len() });
    }
    let p = gd.p();
    let beta = &fit.fit.beta_hat;
    let weights = gd.weights();
    let mut acc = CovarianceBundle {
        sigma11: DMatrix::zeros(p, p),
        sigma21: DMatrix::zeros(3, p),
        sigma22: DMatrix::zeros(3, 3),
        gamma: DMatrix::zeros(p, p),
        a0: DMatrix::zeros(p, 2),
        b0: DMatrix::zeros(2, 3),
        zdot: DMatrix::zeros(p, p),
        sigma0: DMatrix::zeros(p, p),
        beta_cov: DMatrix::zeros(p, p),
        f_used: 0.0,
        n: gd.n(),
    };
    let mut groups = Vec::with_capacity(gd.k());
    for (k, ((g, est), w)) in gd.groups.iter().zip(&fit.theta_estimates).zip(&weights).enumerate() {
        let theta = est.theta;
        let (b0, s22) = in_group(k, theta_plugins(est, ThetaMode::Both, g.f_n() < 1.0))?;
        let mo = moments(g.covariates(), p, beta, &theta);
        let (zdot, sigma0) = assemble(&mo, &b0, &s22, g.f_n());
        acc.sigma11 += &mo.sigma11 * *w;
        acc.sigma21 += &mo.sigma21 * *w;
        acc.sigma22 += &s22 * *w;
        acc.gamma += &mo.gamma * *w;
        acc.a0 += &mo.a0 * *w;
        acc.b0 += &b0 * *w;
        acc.zdot += &zdot * *w;
        acc.sigma0 += &sigma0 * *w;
        acc.f_used += g.f_n() * *w;
        groups.push(in_group(k, bundle_with(g, beta, &theta, est, ThetaMode::Both, 0.0))?);
    }
    acc.zdot = symmetrize(&acc.zdot);
    acc.sigma0 = symmetrize(&acc.sigma0);
    acc.beta_cov = sandwich(&acc.zdot, &acc.sigma0, gd.n())?;
    Ok(GroupedCovariance { combined: acc, groups })
}

/// The `theta2 = 0` rate estimate: Haldane `theta1`, zero false-negative rate.
pub fn theta2_zero_estimate(data: &Dataset) -> Result<ThetaEstimate> {
    let mut est = estimate_theta_from(data)?;
    est.theta.theta2 = 0.0;
    Ok(est)
}

/// PMLE when true ones are never recorded as zeros.
pub fn fit_pmle_theta2_zero(data: &Dataset, opts: &SolverOptions) -> Result<FitResult> {
    let est = theta2_zero_estimate(data)?;
    let mut fit = crate::estimators::fit_pmle_with_theta(data, est.theta, opts)?;
    fit.theta_estimate = Some(est);
    let widest = data.covariates().map(|x| dot(x, &fit.beta_hat).abs()).fold(0.0f64, f64::max);
    if widest > ONE_SIDED_PREDICTOR_BOUND {
        fit.warnings.push(FitWarning::LargeLinearPredictor);
    }
    Ok(fit)
}

/// Plug-in covariance for the `theta2 = 0` fit; only `theta1`'s sampling
/// variability enters.
pub fn theta2_zero_covariance(data: &Dataset, fit: &FitResult) -> Result<CovarianceBundle> {
    let est = match fit.theta_estimate {
        Some(e) => e,
        None => theta2_zero_estimate(data)?,
    };
    let theta = MisclassProbs::new(est.theta.theta1, 0.0);
    bundle_with(data, &fit.beta_hat, &theta, &est, ThetaMode::SecondFixedAtZero, crate::model::DEFAULT_IDENT_TOL)
}
