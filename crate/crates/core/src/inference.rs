//! Plug-in sandwich covariance of the PMLE and Wald-type intervals.
//!
//! Every expectation over the covariate law is replaced by the average over
//! all `n` observed covariate rows, and the limiting validation fraction by
//! `f_n`.

use nalgebra::{DMatrix, DVector, Matrix2x3, Matrix3};

use crate::error::{Error, Result};
use crate::model::{dot, psi, rank_one, Dataset, MisclassProbs, SurrogateTerms};
use crate::normal;
use crate::solver::{condition_number, CONDITION_LIMIT};
use crate::theta::ThetaEstimate;

/// All plug-in matrices behind the PMLE covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBundle {
    /// `E[psi(1-psi) x x']`, the logistic information.
    pub sigma11: DMatrix<f64>,
    /// `Cov(W, h1)`, 3 x p.
    pub sigma21: DMatrix<f64>,
    /// `Var W` for the validation cell indicators `W = (V1, V2, V3)`.
    pub sigma22: DMatrix<f64>,
    /// `Var h2` under the model.
    pub gamma: DMatrix<f64>,
    /// Derivative of the expected non-validation score in `theta`, p x 2.
    pub a0: DMatrix<f64>,
    /// Derivative of `theta` in the cell probabilities, 2 x 3.
    pub b0: DMatrix<f64>,
    pub zdot: DMatrix<f64>,
    pub sigma0: DMatrix<f64>,
    /// Covariance of `beta_hat`: `Zdot^{-1} Sigma0 Zdot^{-T} / n`.
    pub beta_cov: DMatrix<f64>,
    pub f_used: f64,
    pub n: usize,
}

impl CovarianceBundle {
    pub fn p(&self) -> usize {
        self.beta_cov.nrows()
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.p()).map(|j| self.beta_cov[(j, j)].max(0.0).sqrt()).collect()
    }

    /// `B0 Sigma22 B0'`, the limiting covariance of `sqrt(n1) (theta_hat - theta0)` used here.
    pub fn theta_limit_cov(&self) -> DMatrix<f64> {
        &self.b0 * &self.sigma22 * self.b0.transpose()
    }
}

/// Covariate-law moments evaluated at `(beta, theta)`.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub sigma11: DMatrix<f64>,
    pub sigma21: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub a0: DMatrix<f64>,
}

pub(crate) fn moments<'a, I>(rows: I, p: usize, beta: &DVector<f64>, theta: &MisclassProbs) -> Moments
where
    I: Iterator<Item = &'a [f64]>,
{
    let mut sigma11 = DMatrix::zeros(p, p);
    let mut gamma = DMatrix::zeros(p, p);
    let mut m = DVector::zeros(p);
    let mut a0 = DMatrix::zeros(p, 2);
    let mut count = 0usize;
    let c = theta.contrast();
    for x in rows {
        count += 1;
        let t = SurrogateTerms::new(dot(x, beta), theta);
        let s = t.s();
        rank_one(&mut sigma11, s, x);
        rank_one(&mut gamma, c * c * s * t.ratio, x);
        let w1 = -c * t.ratio * t.one_minus_psi;
        let w2 = c * t.ratio * t.psi;
        for j in 0..p {
            m[j] += s * x[j];
            a0[(j, 0)] += w1 * x[j];
            a0[(j, 1)] += w2 * x[j];
        }
    }
    let k = 1.0 / count as f64;
    sigma11 *= k;
    gamma *= k;
    m *= k;
    a0 *= k;
    let mut sigma21 = DMatrix::zeros(3, p);
    let coef = [-(1.0 - theta.theta1), theta.theta2, -theta.theta1];
    for (i, ci) in coef.iter().enumerate() {
        for j in 0..p {
            sigma21[(i, j)] = ci * m[j];
        }
    }
    Moments { sigma11, sigma21, gamma, a0 }
}

pub(crate) fn to_dmatrix<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

/// `Zdot` and `Sigma0` for one sample with validation fraction `f`.
pub(crate) fn assemble(
    mo: &Moments,
    b0: &DMatrix<f64>,
    sigma22: &DMatrix<f64>,
    f: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let zdot = -(&mo.sigma11 * f) - &mo.gamma * (1.0 - f);
    let ab = &mo.a0 * b0;
    let cross = &ab * &mo.sigma21;
    let theta_term = &ab * sigma22 * ab.transpose();
    let mut sigma0 = &mo.sigma11 * f + (&cross + cross.transpose()) * (1.0 - f) + &mo.gamma * (1.0 - f);
    if f < 1.0 {
        sigma0 += theta_term * ((1.0 - f) * (1.0 - f) / f);
    }
    (symmetrize(&zdot), symmetrize(&sigma0))
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `Zdot^{-1} Sigma0 Zdot^{-T} / n`.
pub(crate) fn sandwich(zdot: &DMatrix<f64>, sigma0: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    let condition = condition_number(zdot);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularZdot { condition });
    }
    let inv = zdot.clone().try_inverse().ok_or(Error::SingularZdot { condition: f64::INFINITY })?;
    Ok(symmetrize(&(&inv * sigma0 * inv.transpose())) / n as f64)
}

/// How the misclassification rates entered the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ThetaMode {
    Both,
    /// `theta2` fixed at zero; its row of `B0` is dropped.
    SecondFixedAtZero,
}

pub(crate) fn theta_plugins(
    est: &ThetaEstimate,
    mode: ThetaMode,
    needed: bool,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sigma22: Matrix3<f64> = est.sigma22();
    let b0: Matrix2x3<f64> = match est.b0() {
        Ok(b) => b,
        // With no non-validation rows B0 is multiplied by zero everywhere.
        Err(_) if !needed => Matrix2x3::zeros(),
        Err(e) => return Err(e),
    };
    let mut b0 = to_dmatrix(&b0);
    if mode == ThetaMode::SecondFixedAtZero {
        b0.row_mut(1).fill(0.0);
    }
    Ok((b0, to_dmatrix(&sigma22)))
}

pub(crate) fn bundle_with(
    data: &Dataset,
    beta_hat: &DVector<f64>,
    theta: &MisclassProbs,
    est: &ThetaEstimate,
    mode: ThetaMode,
    ident_tol: f64,
) -> Result<CovarianceBundle> {
    data.require_validation()?;
    data.check_beta(beta_hat)?;
    theta.check_identifiable(ident_tol)?;
    let f = data.f_n();
    let (b0, sigma22) = theta_plugins(est, mode, f < 1.0)?;
    let mo = moments(data.covariates(), data.p(), beta_hat, theta);
    let (zdot, sigma0) = assemble(&mo, &b0, &sigma22, f);
    let beta_cov = sandwich(&zdot, &sigma0, data.n())?;
    Ok(CovarianceBundle {
        sigma11: mo.sigma11,
        sigma21: mo.sigma21,
        sigma22,
        gamma: mo.gamma,
        a0: mo.a0,
        b0,
        zdot,
        sigma0,
        beta_cov,
        f_used: f,
        n: data.n(),
    })
}

/// Plug-in covariance bundle of the PMLE at `(beta_hat, theta_est)`.
pub fn estimate_bundle(data: &Dataset, beta_hat: &DVector<f64>, theta_est: &ThetaEstimate) -> Result<CovarianceBundle> {
    bundle_with(data, beta_hat, &theta_est.theta, theta_est, ThetaMode::Both, crate::model::DEFAULT_IDENT_TOL)
}

fn check_bundle(bundle: &CovarianceBundle, beta_hat: &DVector<f64>) -> Result<()> {
    if beta_hat.len() != bundle.p() {
        return Err(Error::DimensionMismatch { expected: bundle.p(), got: beta_hat.len() });
    }
    Ok(())
}

fn quad(m: &DMatrix<f64>, g: &DVector<f64>) -> f64 {
    (g.transpose() * m * g)[(0, 0)]
}

/// `beta_j +/- z sd_j` for every coordinate.
pub fn wald_ci(bundle: &CovarianceBundle, beta_hat: &DVector<f64>, level: f64) -> Result<Vec<(f64, f64)>> {
    check_bundle(bundle, beta_hat)?;
    let z = normal::two_sided_z(level)?;
    Ok((0..bundle.p())
        .map(|j| {
            let half = z * bundle.beta_cov[(j, j)].max(0.0).sqrt();
            (beta_hat[j] - half, beta_hat[j] + half)
        })
        .collect())
}

/// Wald interval for `c'beta`.
pub fn linear_functional_ci(
    bundle: &CovarianceBundle,
    beta_hat: &DVector<f64>,
    c: &DVector<f64>,
    level: f64,
) -> Result<(f64, f64)> {
    check_bundle(bundle, beta_hat)?;
    if c.len() != bundle.p() {
        return Err(Error::DimensionMismatch { expected: bundle.p(), got: c.len() });
    }
    if c.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("linear functional must be non-zero".into()));
    }
    let z = normal::two_sided_z(level)?;
    let centre = c.dot(beta_hat);
    let half = z * quad(&bundle.beta_cov, c).max(0.0).sqrt();
    Ok((centre - half, centre + half))
}

/// Delta-method interval for the risk `psi(x0'beta)`, clipped to `[0, 1]`.
pub fn risk_ci_delta(
    bundle: &CovarianceBundle,
    beta_hat: &DVector<f64>,
    x0: &DVector<f64>,
    level: f64,
) -> Result<(f64, f64)> {
    check_bundle(bundle, beta_hat)?;
    if x0.len() != bundle.p() {
        return Err(Error::DimensionMismatch { expected: bundle.p(), got: x0.len() });
    }
    if x0.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("risk profile x0 must be non-zero".into()));
    }
    let z = normal::two_sided_z(level)?;
    let eta = x0.dot(beta_hat);
    let centre = psi(eta);
    let g = x0 * (centre * psi(-eta));
    let half = z * quad(&bundle.beta_cov, &g).max(0.0).sqrt();
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}
