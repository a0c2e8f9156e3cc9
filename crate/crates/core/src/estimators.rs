//! The four estimators of `beta`: naive logistic, pseudo-likelihood (PMLE),
//! joint likelihood (JMLE) and contaminated-data likelihood (CMLE).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, psi, Dataset, MisclassProbs, PseudoLikelihood, SurrogateTerms};
use crate::solver::{newton_root, Diagnostics, RootSystem, SolverOptions};
use crate::theta::{estimate_theta_from, ThetaEstimate};

/// Coefficient norm beyond which a logistic fit is assumed to be separating.
pub const SEPARATION_NORM: f64 = 50.0;

/// Starting misclassification rates for the joint and contaminated-data fits.
pub const THETA_START: MisclassProbs = MisclassProbs::new(0.1, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Naive,
    Pmle,
    Jmle,
    Cmle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Naive, Method::Pmle, Method::Jmle, Method::Cmle];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Pmle => "pmle",
            Method::Jmle => "jmle",
            Method::Cmle => "cmle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Method::Naive),
            "pmle" => Ok(Method::Pmle),
            "jmle" => Ok(Method::Jmle),
            "cmle" => Ok(Method::Cmle),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FitWarning {
    ThetaOutOfUnitInterval,
    NearNonidentifiable,
    SeparationSuspected,
    StepCapHit,
    /// Some `|x'beta|` exceeds the bound under which the one-sided variant is justified.
    LargeLinearPredictor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub beta_hat: DVector<f64>,
    /// Misclassification rates used or estimated alongside `beta`.
    pub theta_hat: Option<MisclassProbs>,
    /// The validation-sample estimate behind `theta_hat`, for the PMLE family.
    pub theta_estimate: Option<ThetaEstimate>,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the estimating function, re-evaluated at the returned point.
    pub final_score_norm: f64,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn has_warning(&self, w: FitWarning) -> bool {
        self.warnings.contains(&w)
    }

    fn push(&mut self, w: FitWarning) {
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct ScoreSystem<'a> {
    lik: PseudoLikelihood<'a>,
}

impl RootSystem for ScoreSystem<'_> {
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.lik.score(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.lik.jacobian(x)
    }
}

fn finish(
    method: Method,
    beta_hat: DVector<f64>,
    theta: Option<MisclassProbs>,
    est: Option<ThetaEstimate>,
    diag: &Diagnostics,
    residual_norm: f64,
) -> FitResult {
    let mut fit = FitResult {
        method,
        beta_hat,
        theta_hat: theta,
        theta_estimate: est,
        converged: true,
        iterations: diag.iterations,
        final_score_norm: residual_norm,
        warnings: Vec::new(),
    };
    if diag.step_cap_hit {
        fit.push(FitWarning::StepCapHit);
    }
    fit
}

fn check_start(data: &Dataset, start: &[f64]) -> Result<DVector<f64>> {
    let v = DVector::from_column_slice(start);
    data.check_beta(&v)?;
    Ok(v)
}

/// `opts.start` when given, otherwise the naive fit, otherwise zero.
pub fn starting_beta(data: &Dataset, opts: &SolverOptions) -> Result<DVector<f64>> {
    if let Some(s) = &opts.start {
        return check_start(data, s);
    }
    Ok(fit_naive(data, opts).map(|f| f.beta_hat).unwrap_or_else(|_| DVector::zeros(data.p())))
}

/// Plain logistic regression of `Ỹ` on `x` over all rows, ignoring misclassification.
pub fn fit_naive(data: &Dataset, opts: &SolverOptions) -> Result<FitResult> {
    let pooled = data.surrogate_as_truth();
    let start = match &opts.start {
        Some(s) => check_start(data, s)?,
        None => DVector::zeros(data.p()),
    };
    let mut fit = solve_score(&pooled, MisclassProbs::none(), &start, opts, Method::Naive, None)?;
    fit.theta_hat = None;
    // A fit that reproduces every response almost exactly only exists under separation.
    let worst =
        pooled.validation().map(|r| (r.y as u8 as f64 - psi(dot(r.x, &fit.beta_hat))).abs()).fold(0.0f64, f64::max);
    if worst < 1e-6 {
        fit.push(FitWarning::SeparationSuspected);
    }
    Ok(fit)
}

fn solve_score(
    data: &Dataset,
    theta: MisclassProbs,
    start: &DVector<f64>,
    opts: &SolverOptions,
    method: Method,
    est: Option<ThetaEstimate>,
) -> Result<FitResult> {
    let sys = ScoreSystem { lik: PseudoLikelihood::new(data, theta).with_ident_tol(opts.ident_tol) };
    let (beta, diag) = newton_root(&sys, start, opts)?;
    let norm = max_norm(&sys.residual(&beta)?);
    let mut fit = finish(method, beta, Some(theta), est, &diag, norm);
    if diag.max_iterate_norm > SEPARATION_NORM {
        fit.push(FitWarning::SeparationSuspected);
    }
    Ok(fit)
}

/// PMLE: `theta` estimated from the validation sample, then `Z_n(beta) = 0`.
pub fn fit_pmle(data: &Dataset, opts: &SolverOptions) -> Result<FitResult> {
    let est = estimate_theta_from(data)?;
    fit_pmle_with_estimate(data, &est, opts)
}

pub fn fit_pmle_with_estimate(data: &Dataset, est: &ThetaEstimate, opts: &SolverOptions) -> Result<FitResult> {
    let mut fit = fit_pmle_with_theta(data, est.theta, opts)?;
    fit.theta_estimate = Some(*est);
    Ok(fit)
}

/// Solves the pseudo-likelihood score with the misclassification rates held at `theta`.
pub fn fit_pmle_with_theta(data: &Dataset, theta: MisclassProbs, opts: &SolverOptions) -> Result<FitResult> {
    data.require_validation()?;
    opts.validate()?;
    theta.check_identifiable(opts.ident_tol)?;
    let start = starting_beta(data, opts)?;
    solve_score(data, theta, &start, opts, Method::Pmle, None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Likelihood {
    Joint,
    Contaminated,
}

/// The `(p + 2)`-dimensional score in `(beta, theta1, theta2)`.
struct JointSystem<'a> {
    /// Rows whose true response enters (empty for the contaminated fit).
    data: &'a Dataset,
    /// Rows contributing through the surrogate mixture only.
    surrogate: &'a Dataset,
    ident_tol: f64,
}

impl JointSystem<'_> {
    fn split(&self, z: &DVector<f64>) -> (DVector<f64>, MisclassProbs) {
        let p = self.data.p();
        (z.rows(0, p).into_owned(), MisclassProbs::new(z[p], z[p + 1]))
    }

    fn lik(&self, theta: MisclassProbs) -> PseudoLikelihood<'_> {
        PseudoLikelihood::new(self.surrogate, theta).with_ident_tol(self.ident_tol)
    }
}

impl RootSystem for JointSystem<'_> {
    fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.data.p();
        let (beta, theta) = self.split(z);
        let mut out = DVector::zeros(p + 2);
        let (t1, t2) = (theta.theta1, theta.theta2);
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for row in self.data.validation() {
            match (row.y, row.ytilde) {
                (false, true) => g1 += 1.0 / t1,
                (false, false) => g1 -= 1.0 / (1.0 - t1),
                (true, false) => g2 += 1.0 / t2,
                (true, true) => g2 -= 1.0 / (1.0 - t2),
            }
        }
        let mut surrogate_z = DVector::zeros(p);
        if self.surrogate.n2() > 0 {
            surrogate_z = self.lik(theta).score(&beta)?;
        }
        let mut logistic = DVector::zeros(p);
        if self.data.n1() > 0 {
            logistic = PseudoLikelihood::new(self.data, theta).score(&beta)?;
        }
        for row in self.surrogate.nonvalidation() {
            let t = SurrogateTerms::new(dot(row.x, &beta), &theta);
            let r = t.standardized_residual(row.ytilde);
            let (d1, d2) = t.dh3_dtheta();
            g1 += r * d1;
            g2 += r * d2;
        }
        // Both scores are averages over their own rows; reweight to the full sample.
        let n = (self.data.n1() + self.surrogate.n2()) as f64;
        let w_val = self.data.n1() as f64 / n;
        let w_sur = self.surrogate.n2() as f64 / n;
        for j in 0..p {
            out[j] = w_val * logistic[j] + w_sur * surrogate_z[j];
        }
        out[p] = g1 / n;
        out[p + 1] = g2 / n;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("joint score is not finite".into()));
        }
        Ok(out)
    }

    fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.data.p();
        let k = p + 2;
        let mut jac = DMatrix::zeros(k, k);
        for j in 0..k {
            let h = 1e-6 * (1.0 + z[j].abs());
            let mut zp = z.clone();
            zp[j] += h;
            let mut zm = z.clone();
            zm[j] -= h;
            let col = (self.residual(&zp)? - self.residual(&zm)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let (beta, theta) = self.split(z);
        let n = (self.data.n1() + self.surrogate.n2()) as f64;
        let mut block = DMatrix::zeros(p, p);
        if self.surrogate.n2() > 0 {
            block += self.lik(theta).jacobian(&beta)? * (self.surrogate.n2() as f64 / n);
        }
        if self.data.n1() > 0 {
            block += PseudoLikelihood::new(self.data, theta).jacobian(&beta)? * (self.data.n1() as f64 / n);
        }
        jac.view_mut((0, 0), (p, p)).copy_from(&block);
        Ok(jac)
    }
}

fn fit_joint(data: &Dataset, opts: &SolverOptions, kind: Likelihood) -> Result<FitResult> {
    opts.validate()?;
    let (truth, surrogate, method) = match kind {
        Likelihood::Joint => {
            data.require_validation()?;
            (data.validation_only(), data.select(&[], &(0..data.n2()).collect::<Vec<_>>()), Method::Jmle)
        }
        Likelihood::Contaminated => (data.select(&[], &[]), data.surrogate_only(), Method::Cmle),
    };
    let sys = JointSystem { data: &truth, surrogate: &surrogate, ident_tol: opts.ident_tol };
    let beta0 = starting_beta(data, opts)?;
    let p = data.p();
    let mut z0 = DVector::zeros(p + 2);
    z0.rows_mut(0, p).copy_from(&beta0);
    z0[p] = THETA_START.theta1;
    z0[p + 1] = THETA_START.theta2;
    let (z, diag) = newton_root(&sys, &z0, opts)?;
    let norm = max_norm(&sys.residual(&z)?);
    let (beta, theta) = sys.split(&z);
    let mut fit = finish(method, beta, Some(theta), None, &diag, norm);
    if !theta.in_unit_square() {
        fit.push(FitWarning::ThetaOutOfUnitInterval);
    }
    if kind == Likelihood::Contaminated && near_linear_fraction(data, &fit.beta_hat) > 0.95 {
        fit.push(FitWarning::NearNonidentifiable);
    }
    Ok(fit)
}

/// JMLE: joint root in `(beta, theta)` of the full two-sample likelihood.
pub fn fit_jmle(data: &Dataset, opts: &SolverOptions) -> Result<FitResult> {
    fit_joint(data, opts, Likelihood::Joint)
}

/// CMLE: joint root in `(beta, theta)` using only the surrogate responses.
pub fn fit_cmle(data: &Dataset, opts: &SolverOptions) -> Result<FitResult> {
    fit_joint(data, opts, Likelihood::Contaminated)
}

/// The contaminated-data score in `beta` alone, with `theta` frozen.
pub fn fit_cmle_given_theta(data: &Dataset, theta: MisclassProbs, opts: &SolverOptions) -> Result<FitResult> {
    opts.validate()?;
    theta.check_identifiable(opts.ident_tol)?;
    let pooled = data.surrogate_only();
    let start = match &opts.start {
        Some(s) => check_start(data, s)?,
        None => DVector::zeros(data.p()),
    };
    let sys = ScoreSystem { lik: PseudoLikelihood::new(&pooled, theta).with_ident_tol(opts.ident_tol) };
    let (beta, diag) = newton_root(&sys, &start, opts)?;
    let norm = max_norm(&sys.residual(&beta)?);
    Ok(finish(Method::Cmle, beta, Some(theta), None, &diag, norm))
}

/// Share of rows whose fitted probability lies in `(0.1, 0.9)`, where the
/// logistic curve is close to linear.
pub fn near_linear_fraction(data: &Dataset, beta: &DVector<f64>) -> f64 {
    let inside = data
        .covariates()
        .filter(|x| {
            let q = psi(dot(x, beta));
            q > 0.1 && q < 0.9
        })
        .count();
    inside as f64 / data.n() as f64
}

/// Dispatches on `method`.
pub fn fit(method: Method, data: &Dataset, opts: &SolverOptions) -> Result<FitResult> {
    match method {
        Method::Naive => fit_naive(data, opts),
        Method::Pmle => fit_pmle(data, opts),
        Method::Jmle => fit_jmle(data, opts),
        Method::Cmle => fit_cmle(data, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NonValidationObs;
    use crate::testutil::synthetic;

    #[test]
    fn naive_intercept_only_closed_form() {
        let rows = (0..8).map(|i| NonValidationObs { ytilde: i < 2, x: vec![1.0] }).collect();
        let ds = Dataset::new(1, true, vec![], rows).unwrap();
        let f = fit_naive(&ds, &SolverOptions::default()).unwrap();
        assert!((f.beta_hat[0] - (1.0f64 / 3.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn naive_separation_flagged_or_fails() {
        let rows = (0..20)
            .map(|i| {
                let x = i as f64 - 9.5;
                NonValidationObs { ytilde: x > 0.0, x: vec![x] }
            })
            .collect();
        let ds = Dataset::new(1, false, vec![], rows).unwrap();
        match fit_naive(&ds, &SolverOptions::default()) {
            Ok(f) => assert!(f.has_warning(FitWarning::SeparationSuspected)),
            Err(e) => assert!(matches!(e, Error::NonConvergence { .. } | Error::SingularJacobian { .. })),
        }
    }

    #[test]
    fn pmle_without_nonvalidation_is_plain_logistic() {
        let ds = synthetic(200, 0, &[0.3, 1.0], MisclassProbs::new(0.1, 0.2), 3);
        let pm = fit_pmle(&ds, &SolverOptions::default()).unwrap();
        let truth = ds.validation_only();
        let rows: Vec<_> = truth.validation().map(|r| NonValidationObs { ytilde: r.y, x: r.x.to_vec() }).collect();
        let plain = fit_naive(&Dataset::new(2, true, vec![], rows).unwrap(), &SolverOptions::default()).unwrap();
        assert!((pm.beta_hat - plain.beta_hat).amax() < 1e-8);
    }

    #[test]
    fn pmle_converged_residual_and_order_invariance() {
        let ds = synthetic(60, 240, &[0.0, 1.5], MisclassProbs::new(0.1, 0.3), 11);
        let opts = SolverOptions::default();
        let f = fit_pmle(&ds, &opts).unwrap();
        let theta = f.theta_hat.unwrap();
        let z = crate::model::score(&ds, &f.beta_hat, &theta).unwrap();
        assert!(z.amax() <= opts.tol);
        let vi: Vec<usize> = (0..ds.n1()).rev().collect();
        let ni: Vec<usize> = (0..ds.n2()).rev().collect();
        let g = fit_pmle(&ds.select(&vi, &ni), &opts).unwrap();
        assert!((f.beta_hat - g.beta_hat).amax() < 1e-9);
    }

    #[test]
    fn pmle_with_zero_theta_is_logistic_on_union() {
        let ds = synthetic(50, 150, &[-0.4, 1.0], MisclassProbs::new(0.1, 0.2), 5);
        let f = fit_pmle_with_theta(&ds, MisclassProbs::none(), &SolverOptions::default()).unwrap();
        let mut rows: Vec<_> = ds.validation().map(|r| NonValidationObs { ytilde: r.y, x: r.x.to_vec() }).collect();
        rows.extend(ds.nonvalidation_obs());
        let plain = fit_naive(&Dataset::new(2, true, vec![], rows).unwrap(), &SolverOptions::default()).unwrap();
        assert!((f.beta_hat - plain.beta_hat).amax() < 1e-8);
    }

    #[test]
    fn pmle_is_deterministic() {
        let ds = synthetic(40, 100, &[0.2, -1.0, 0.5], MisclassProbs::new(0.1, 0.3), 8);
        let a = fit_pmle(&ds, &SolverOptions::default()).unwrap();
        let b = fit_pmle(&ds, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn jmle_on_full_validation_recovers_cell_frequencies() {
        let ds = synthetic(300, 0, &[0.2, 1.0], MisclassProbs::new(0.15, 0.25), 21);
        let f = fit_jmle(&ds, &SolverOptions::default()).unwrap();
        let c = crate::theta::count_dataset_cells(&ds).unwrap();
        let t = f.theta_hat.unwrap();
        assert!((t.theta1 - c.n10 as f64 / (c.n00 + c.n10) as f64).abs() < 1e-7);
        assert!((t.theta2 - c.n01 as f64 / (c.n01 + c.n11) as f64).abs() < 1e-7);
        assert!(f.final_score_norm <= 1e-8);
    }

    #[test]
    fn jmle_and_cmle_converge_on_informative_data() {
        let ds = synthetic(400, 1600, &[0.0, 3.0], MisclassProbs::new(0.1, 0.2), 31);
        let j = fit_jmle(&ds, &SolverOptions::default()).unwrap();
        assert!((j.beta_hat[1] - 3.0).abs() < 0.6);
        let c = fit_cmle(&ds, &SolverOptions::default()).unwrap();
        assert!(c.final_score_norm <= 1e-8);
    }

    #[test]
    fn cmle_with_zero_theta_is_naive() {
        let ds = synthetic(30, 120, &[0.5, -1.0], MisclassProbs::new(0.1, 0.2), 13);
        let c = fit_cmle_given_theta(&ds, MisclassProbs::none(), &SolverOptions::default()).unwrap();
        let n = fit_naive(&ds, &SolverOptions::default()).unwrap();
        assert!((c.beta_hat - n.beta_hat).amax() < 1e-10);
    }

    #[test]
    fn cmle_duplicated_rows_same_estimate() {
        let ds = synthetic(0, 800, &[0.0, 3.0], MisclassProbs::new(0.1, 0.2), 17);
        let idx: Vec<usize> = (0..ds.n2()).chain(0..ds.n2()).collect();
        let doubled = ds.select(&[], &idx);
        let a = fit_cmle(&ds, &SolverOptions::default());
        let b = fit_cmle(&doubled, &SolverOptions::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert!((a.beta_hat - b.beta_hat).amax() < 1e-6);
            }
            (Err(_), Err(_)) => {}
            other => panic!("duplication changed the outcome: {other:?}"),
        }
    }

    #[test]
    fn identifiability_is_reported() {
        let ds = synthetic(20, 20, &[0.0, 1.0], MisclassProbs::none(), 1);
        let err = fit_pmle_with_theta(&ds, MisclassProbs::new(0.5, 0.5), &SolverOptions::default()).unwrap_err();
        assert!(err.is_identifiability());
    }

    #[test]
    fn pmle_needs_validation() {
        let ds = synthetic(0, 20, &[0.0, 1.0], MisclassProbs::none(), 1);
        assert!(matches!(fit_pmle(&ds, &SolverOptions::default()), Err(Error::InvalidInput(_))));
    }
}
