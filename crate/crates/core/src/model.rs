//! Logistic response model with misclassified surrogate responses.
//!
//! The true response `Y` follows a logistic regression on `x`. The observed
//! surrogate `Ỹ` flips a true zero to one with probability `theta1` and a true
//! one to zero with probability `theta2`. A [`Dataset`] holds a validation
//! sample where both `Y` and `Ỹ` are observed, and a non-validation sample
//! where only `Ỹ` is.
//!
//! Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `|1 - theta1 - theta2|` before the surrogate carries no
/// information about `beta`.
pub const DEFAULT_IDENT_TOL: f64 = 1e-6;

/// Logistic function, evaluated without ever exponentiating a positive number.
#[inline]
pub fn psi(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `ln psi(u)`.
#[inline]
pub fn log_psi(u: f64) -> f64 {
    if u >= 0.0 {
        -(-u).exp().ln_1p()
    } else {
        u - u.exp().ln_1p()
    }
}

/// `ln(1 - psi(u))`.
#[inline]
pub fn log_one_minus_psi(u: f64) -> f64 {
    log_psi(-u)
}

#[inline]
pub(crate) fn dot(x: &[f64], beta: &DVector<f64>) -> f64 {
    x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()
}

/// Misclassification rates: `theta1 = P(Ỹ=1 | Y=0)`, `theta2 = P(Ỹ=0 | Y=1)`.
///
/// Values are not clamped. Joint and contaminated-data fits may legitimately
/// report raw roots outside `[0, 1]`; use the `check_*` methods where a caller
/// needs a proper probability pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisclassProbs {
    pub theta1: f64,
    pub theta2: f64,
}

impl MisclassProbs {
    pub const fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }

    /// No misclassification.
    pub const fn none() -> Self {
        Self::new(0.0, 0.0)
    }

    /// `1 - theta1 - theta2`, the factor by which the surrogate attenuates the signal.
    #[inline]
    pub fn contrast(&self) -> f64 {
        1.0 - self.theta1 - self.theta2
    }

    pub fn check_identifiable(&self, tol: f64) -> Result<()> {
        let gap = self.contrast().abs();
        if !(gap > tol) {
            return Err(Error::Identifiability { gap, tol });
        }
        Ok(())
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.theta1) && (0.0..=1.0).contains(&self.theta2)
    }

    pub fn check_unit_square(&self) -> Result<()> {
        if !self.in_unit_square() {
            return Err(Error::Domain(format!(
                "misclassification rates ({}, {}) outside [0, 1]",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }

    pub fn check_interior(&self) -> Result<()> {
        let inside = |t: f64| t > 0.0 && t < 1.0;
        if !(inside(self.theta1) && inside(self.theta2)) {
            return Err(Error::Domain(format!(
                "misclassification rates ({}, {}) must lie strictly inside (0, 1)",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }
}

/// The box `(delta1, delta2)` that keeps both misclassification rates away
/// from 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBox {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ThetaBox {
    fn default() -> Self {
        Self { lower: 1e-4, upper: 1.0 - 1e-4 }
    }
}

impl ThetaBox {
    pub fn contains(&self, theta: &MisclassProbs) -> bool {
        let inside = |t: f64| t > self.lower && t < self.upper;
        inside(theta.theta1) && inside(theta.theta2)
    }

    /// Upper bound on `1 / (h3 (1 - h3))` over the box.
    ///
    /// `h3` is a convex combination of `theta1` and `1 - theta2`, so
    /// `h3 (1 - h3)` is bounded below by the smaller of `delta_i (1 - delta_i)`.
    pub fn m0(&self) -> f64 {
        let v = |d: f64| d * (1.0 - d);
        1.0 / v(self.lower).min(v(self.upper))
    }
}

/// A validation row: true response, surrogate, covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationObs {
    pub y: bool,
    pub ytilde: bool,
    pub x: Vec<f64>,
}

/// A non-validation row: surrogate and covariates only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonValidationObs {
    pub ytilde: bool,
    pub x: Vec<f64>,
}

/// Borrowed view of a validation row.
#[derive(Debug, Clone, Copy)]
pub struct ValidationRow<'a> {
    pub y: bool,
    pub ytilde: bool,
    pub x: &'a [f64],
}

/// Borrowed view of a non-validation row.
#[derive(Debug, Clone, Copy)]
pub struct NonValidationRow<'a> {
    pub ytilde: bool,
    pub x: &'a [f64],
}

/// Validation and non-validation samples sharing a covariate dimension `p`.
///
/// Covariates are stored row-major, one contiguous buffer per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    p: usize,
    has_intercept: bool,
    val_x: Vec<f64>,
    val_y: Vec<bool>,
    val_ytilde: Vec<bool>,
    non_x: Vec<f64>,
    non_ytilde: Vec<bool>,
}

impl Dataset {
    /// Builds a dataset, checking dimensions, finiteness and the intercept column.
    ///
    /// An empty validation sample is accepted here because the naive and
    /// contaminated-data fits do not need one; the estimators that do check it.
    pub fn new(
        p: usize,
        has_intercept: bool,
        validation: Vec<ValidationObs>,
        nonvalidation: Vec<NonValidationObs>,
    ) -> Result<Self> {
        let mut val_x = Vec::with_capacity(validation.len() * p);
        let mut val_y = Vec::with_capacity(validation.len());
        let mut val_ytilde = Vec::with_capacity(validation.len());
        for obs in validation {
            check_row(&obs.x, p, has_intercept)?;
            val_x.extend_from_slice(&obs.x);
            val_y.push(obs.y);
            val_ytilde.push(obs.ytilde);
        }
        let mut non_x = Vec::with_capacity(nonvalidation.len() * p);
        let mut non_ytilde = Vec::with_capacity(nonvalidation.len());
        for obs in nonvalidation {
            check_row(&obs.x, p, has_intercept)?;
            non_x.extend_from_slice(&obs.x);
            non_ytilde.push(obs.ytilde);
        }
        Self::from_columns(p, has_intercept, val_x, val_y, val_ytilde, non_x, non_ytilde)
    }

    /// Builds a dataset from row-major covariate buffers.
    pub fn from_columns(
        p: usize,
        has_intercept: bool,
        val_x: Vec<f64>,
        val_y: Vec<bool>,
        val_ytilde: Vec<bool>,
        non_x: Vec<f64>,
        non_ytilde: Vec<bool>,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("covariate dimension must be positive".into()));
        }
        if val_y.len() != val_ytilde.len() || val_x.len() != val_y.len() * p {
            return Err(Error::DimensionMismatch { expected: val_y.len() * p, got: val_x.len() });
        }
        if non_x.len() != non_ytilde.len() * p {
            return Err(Error::DimensionMismatch { expected: non_ytilde.len() * p, got: non_x.len() });
        }
        if val_y.is_empty() && non_ytilde.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        for row in val_x.chunks_exact(p).chain(non_x.chunks_exact(p)) {
            check_row(row, p, has_intercept)?;
        }
        Ok(Self { p, has_intercept, val_x, val_y, val_ytilde, non_x, non_ytilde })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn n1(&self) -> usize {
        self.val_y.len()
    }

    pub fn n2(&self) -> usize {
        self.non_ytilde.len()
    }

    pub fn n(&self) -> usize {
        self.n1() + self.n2()
    }

    /// Validation fraction `n1 / n`.
    pub fn f_n(&self) -> f64 {
        self.n1() as f64 / self.n() as f64
    }

    pub fn validation(&self) -> impl ExactSizeIterator<Item = ValidationRow<'_>> + '_ {
        self.val_x
            .chunks_exact(self.p)
            .zip(self.val_y.iter().zip(&self.val_ytilde))
            .map(|(x, (&y, &ytilde))| ValidationRow { y, ytilde, x })
    }

    pub fn nonvalidation(&self) -> impl ExactSizeIterator<Item = NonValidationRow<'_>> + '_ {
        self.non_x.chunks_exact(self.p).zip(&self.non_ytilde).map(|(x, &ytilde)| NonValidationRow { ytilde, x })
    }

    /// Every row's surrogate and covariates, validation rows first.
    pub fn pooled_surrogate(&self) -> impl Iterator<Item = NonValidationRow<'_>> + '_ {
        self.validation().map(|r| NonValidationRow { ytilde: r.ytilde, x: r.x }).chain(self.nonvalidation())
    }

    /// Every covariate row, validation rows first.
    pub fn covariates(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.val_x.chunks_exact(self.p).chain(self.non_x.chunks_exact(self.p))
    }

    pub fn validation_row(&self, i: usize) -> ValidationRow<'_> {
        ValidationRow { y: self.val_y[i], ytilde: self.val_ytilde[i], x: &self.val_x[i * self.p..(i + 1) * self.p] }
    }

    pub fn nonvalidation_row(&self, i: usize) -> NonValidationRow<'_> {
        NonValidationRow { ytilde: self.non_ytilde[i], x: &self.non_x[i * self.p..(i + 1) * self.p] }
    }

    pub fn validation_obs(&self) -> Vec<ValidationObs> {
        self.validation().map(|r| ValidationObs { y: r.y, ytilde: r.ytilde, x: r.x.to_vec() }).collect()
    }

    pub fn nonvalidation_obs(&self) -> Vec<NonValidationObs> {
        self.nonvalidation().map(|r| NonValidationObs { ytilde: r.ytilde, x: r.x.to_vec() }).collect()
    }

    /// New dataset made of the given validation and non-validation rows, with repeats.
    pub fn select(&self, val_idx: &[usize], non_idx: &[usize]) -> Self {
        let p = self.p;
        let mut val_x = Vec::with_capacity(val_idx.len() * p);
        let mut val_y = Vec::with_capacity(val_idx.len());
        let mut val_ytilde = Vec::with_capacity(val_idx.len());
        for &i in val_idx {
            val_x.extend_from_slice(&self.val_x[i * p..(i + 1) * p]);
            val_y.push(self.val_y[i]);
            val_ytilde.push(self.val_ytilde[i]);
        }
        let mut non_x = Vec::with_capacity(non_idx.len() * p);
        let mut non_ytilde = Vec::with_capacity(non_idx.len());
        for &i in non_idx {
            non_x.extend_from_slice(&self.non_x[i * p..(i + 1) * p]);
            non_ytilde.push(self.non_ytilde[i]);
        }
        Self { p, has_intercept: self.has_intercept, val_x, val_y, val_ytilde, non_x, non_ytilde }
    }

    /// The validation sample alone, as a dataset with `f_n = 1`.
    pub fn validation_only(&self) -> Self {
        let idx: Vec<usize> = (0..self.n1()).collect();
        self.select(&idx, &[])
    }

    /// Pooled `(Ỹ, x)` rows treated as a validation sample whose true response
    /// is the surrogate. Used by the naive fit.
    pub fn surrogate_as_truth(&self) -> Self {
        let mut val_x = self.val_x.clone();
        val_x.extend_from_slice(&self.non_x);
        let mut ytilde = self.val_ytilde.clone();
        ytilde.extend_from_slice(&self.non_ytilde);
        Self {
            p: self.p,
            has_intercept: self.has_intercept,
            val_x,
            val_y: ytilde.clone(),
            val_ytilde: ytilde,
            non_x: Vec::new(),
            non_ytilde: Vec::new(),
        }
    }

    /// Stacks datasets of equal dimension, keeping the validation split.
    pub fn concat(parts: &[Dataset]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))?;
        let mut out = first.select(&[], &[]);
        for d in parts {
            if d.p != first.p || d.has_intercept != first.has_intercept {
                return Err(Error::DimensionMismatch { expected: first.p, got: d.p });
            }
            out.val_x.extend_from_slice(&d.val_x);
            out.val_y.extend_from_slice(&d.val_y);
            out.val_ytilde.extend_from_slice(&d.val_ytilde);
            out.non_x.extend_from_slice(&d.non_x);
            out.non_ytilde.extend_from_slice(&d.non_ytilde);
        }
        Ok(out)
    }

    /// Every row demoted to the non-validation sample, dropping the true responses.
    pub fn surrogate_only(&self) -> Self {
        let mut non_x = self.val_x.clone();
        non_x.extend_from_slice(&self.non_x);
        let mut non_ytilde = self.val_ytilde.clone();
        non_ytilde.extend_from_slice(&self.non_ytilde);
        Self {
            p: self.p,
            has_intercept: self.has_intercept,
            val_x: Vec::new(),
            val_y: Vec::new(),
            val_ytilde: Vec::new(),
            non_x,
            non_ytilde,
        }
    }

    pub(crate) fn require_validation(&self) -> Result<()> {
        if self.n1() == 0 {
            return Err(Error::InvalidInput("validation sample is empty (n1 = 0)".into()));
        }
        Ok(())
    }

    pub(crate) fn check_beta(&self, beta: &DVector<f64>) -> Result<()> {
        if beta.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, got: beta.len() });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(())
    }
}

fn check_row(x: &[f64], p: usize, has_intercept: bool) -> Result<()> {
    if x.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite covariate".into()));
    }
    if has_intercept && x[0] != 1.0 {
        return Err(Error::InvalidInput(format!("intercept column must be 1, found {}", x[0])));
    }
    Ok(())
}

/// `x (y - psi(x'beta))`, the plain logistic estimating function.
pub fn h1(beta: &DVector<f64>, y: bool, x: &[f64]) -> Result<DVector<f64>> {
    if x.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: beta.len(), got: x.len() });
    }
    let r = logistic_residual(y, dot(x, beta));
    Ok(DVector::from_iterator(x.len(), x.iter().map(|v| v * r)))
}

/// `P(Ỹ = 1 | x)` under `(beta, theta)`.
pub fn h3(beta: &DVector<f64>, theta: &MisclassProbs, x: &[f64]) -> Result<f64> {
    if x.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: beta.len(), got: x.len() });
    }
    Ok(SurrogateTerms::new(dot(x, beta), theta).h3)
}

/// Score contribution of one non-validation row.
pub fn h2(beta: &DVector<f64>, theta: &MisclassProbs, ytilde: bool, x: &[f64]) -> Result<DVector<f64>> {
    h2_with_tol(beta, theta, ytilde, x, DEFAULT_IDENT_TOL)
}

pub fn h2_with_tol(
    beta: &DVector<f64>,
    theta: &MisclassProbs,
    ytilde: bool,
    x: &[f64],
    ident_tol: f64,
) -> Result<DVector<f64>> {
    if x.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: beta.len(), got: x.len() });
    }
    theta.check_identifiable(ident_tol)?;
    let w = SurrogateTerms::new(dot(x, beta), theta).score_weight(ytilde);
    Ok(DVector::from_iterator(x.len(), x.iter().map(|v| v * w)))
}

/// `1 / (h3 (1 - h3))` at one covariate row.
pub fn inverse_bernoulli_variance(beta: &DVector<f64>, theta: &MisclassProbs, x: &[f64]) -> Result<f64> {
    let t = SurrogateTerms::new(dot(&x[..beta.len().min(x.len())], beta), theta);
    if x.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: beta.len(), got: x.len() });
    }
    Ok(1.0 / (t.h3 * t.one_minus_h3))
}

#[inline]
fn logistic_residual(y: bool, eta: f64) -> f64 {
    if y {
        psi(-eta)
    } else {
        -psi(eta)
    }
}

/// Per-row quantities of the surrogate model at linear predictor `eta`.
///
/// `ratio` is `psi (1 - psi) / (h3 (1 - h3))`, assembled as
/// `(psi / h3) * ((1 - psi) / (1 - h3))` so that a zero rate never forces a
/// division by a vanishing `h3` or `1 - h3`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SurrogateTerms {
    pub psi: f64,
    pub one_minus_psi: f64,
    pub h3: f64,
    pub one_minus_h3: f64,
    pub contrast: f64,
    pub ratio: f64,
}

impl SurrogateTerms {
    #[inline]
    pub fn new(eta: f64, theta: &MisclassProbs) -> Self {
        let (t1, t2) = (theta.theta1, theta.theta2);
        let psi_v = psi(eta);
        let omp = psi(-eta);
        let h3 = t1 * omp + (1.0 - t2) * psi_v;
        let one_minus_h3 = t2 * psi_v + (1.0 - t1) * omp;
        let left = if t1 == 0.0 { 1.0 / (1.0 - t2) } else { psi_v / h3 };
        let right = if t2 == 0.0 { 1.0 / (1.0 - t1) } else { omp / one_minus_h3 };
        Self { psi: psi_v, one_minus_psi: omp, h3, one_minus_h3, contrast: 1.0 - t1 - t2, ratio: left * right }
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.psi * self.one_minus_psi
    }

    /// `ytilde - h3`.
    #[inline]
    pub fn residual(&self, ytilde: bool) -> f64 {
        if ytilde {
            self.one_minus_h3
        } else {
            -self.h3
        }
    }

    /// Scalar multiplying `x` in `h2`.
    #[inline]
    pub fn score_weight(&self, ytilde: bool) -> f64 {
        self.contrast * self.ratio * self.residual(ytilde)
    }

    /// Derivative of `score_weight` with respect to `eta`, split into the part
    /// proportional to the residual and the residual-free part.
    #[inline]
    pub fn score_weight_slope(&self, ytilde: bool) -> (f64, f64) {
        let c = self.contrast;
        let r = self.ratio;
        let d_ratio = r * ((1.0 - 2.0 * self.psi) - (1.0 - 2.0 * self.h3) * c * r);
        let residual_part = c * d_ratio * self.residual(ytilde);
        let expected_part = -c * c * self.s() * r;
        (residual_part, expected_part)
    }

    /// `d h3 / d theta1`, `d h3 / d theta2`.
    #[inline]
    pub fn dh3_dtheta(&self) -> (f64, f64) {
        (self.one_minus_psi, -self.psi)
    }

    /// `(ytilde - h3) / (h3 (1 - h3))`.
    #[inline]
    pub fn standardized_residual(&self, ytilde: bool) -> f64 {
        if ytilde {
            1.0 / self.h3
        } else {
            -1.0 / self.one_minus_h3
        }
    }
}

/// Pseudo log-likelihood of `beta` with the misclassification rates held fixed.
///
/// Sums are scaled by `1/n`. The score is the gradient of [`Self::loglik`].
#[derive(Debug, Clone, Copy)]
pub struct PseudoLikelihood<'a> {
    data: &'a Dataset,
    theta: MisclassProbs,
    ident_tol: f64,
}

impl<'a> PseudoLikelihood<'a> {
    pub fn new(data: &'a Dataset, theta: MisclassProbs) -> Self {
        Self { data, theta, ident_tol: DEFAULT_IDENT_TOL }
    }

    pub fn with_ident_tol(mut self, tol: f64) -> Self {
        self.ident_tol = tol;
        self
    }

    pub fn theta(&self) -> MisclassProbs {
        self.theta
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    fn needs_theta(&self) -> bool {
        self.data.n2() > 0
    }

    fn check(&self, beta: &DVector<f64>) -> Result<()> {
        self.data.check_beta(beta)?;
        if self.needs_theta() {
            self.theta.check_identifiable(self.ident_tol)?;
        }
        Ok(())
    }

    pub fn loglik(&self, beta: &DVector<f64>) -> Result<f64> {
        self.check(beta)?;
        self.theta.check_interior()?;
        let MisclassProbs { theta1: t1, theta2: t2 } = self.theta;
        let log_checked = |v: f64| -> Result<f64> {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::Domain(format!("log of non-positive value {v}")))
            }
        };
        let mut total = 0.0;
        for row in self.data.validation() {
            let eta = dot(row.x, beta);
            total += match (row.y, row.ytilde) {
                (true, true) => log_checked(1.0 - t2)? + log_psi(eta),
                (true, false) => log_checked(t2)? + log_psi(eta),
                (false, true) => log_checked(t1)? + log_one_minus_psi(eta),
                (false, false) => log_checked(1.0 - t1)? + log_one_minus_psi(eta),
            };
        }
        for row in self.data.nonvalidation() {
            let t = SurrogateTerms::new(dot(row.x, beta), &self.theta);
            total += log_checked(if row.ytilde { t.h3 } else { t.one_minus_h3 })?;
        }
        Ok(total / self.data.n() as f64)
    }

    /// `f_n * mean(h1 over validation) + (1 - f_n) * mean(h2 over non-validation)`.
    pub fn score(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(beta)?;
        let mut out = DVector::zeros(self.data.p());
        self.accumulate_score(beta, out.as_mut_slice());
        Ok(out)
    }

    pub(crate) fn accumulate_score(&self, beta: &DVector<f64>, out: &mut [f64]) {
        let scale = 1.0 / self.data.n() as f64;
        for row in self.data.validation() {
            let r = logistic_residual(row.y, dot(row.x, beta)) * scale;
            axpy(out, r, row.x);
        }
        for row in self.data.nonvalidation() {
            let w = SurrogateTerms::new(dot(row.x, beta), &self.theta).score_weight(row.ytilde) * scale;
            axpy(out, w, row.x);
        }
    }

    /// Analytic Jacobian of [`Self::score`].
    pub fn jacobian(&self, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(beta)?;
        Ok(self.jacobian_parts(beta, true))
    }

    /// The residual-free part of the Jacobian: what the Jacobian becomes when
    /// every response is replaced by its model expectation.
    pub fn expected_jacobian(&self, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(beta)?;
        Ok(self.jacobian_parts(beta, false))
    }

    fn jacobian_parts(&self, beta: &DVector<f64>, with_residual: bool) -> DMatrix<f64> {
        let p = self.data.p();
        let scale = 1.0 / self.data.n() as f64;
        let mut jac = DMatrix::zeros(p, p);
        for row in self.data.validation() {
            let eta = dot(row.x, beta);
            let w = -psi(eta) * psi(-eta) * scale;
            rank_one(&mut jac, w, row.x);
        }
        for row in self.data.nonvalidation() {
            let t = SurrogateTerms::new(dot(row.x, beta), &self.theta);
            let (resid, expected) = t.score_weight_slope(row.ytilde);
            let w = if with_residual { resid + expected } else { expected } * scale;
            rank_one(&mut jac, w, row.x);
        }
        jac
    }
}

#[inline]
pub(crate) fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

#[inline]
pub(crate) fn rank_one(m: &mut DMatrix<f64>, w: f64, x: &[f64]) {
    let p = x.len();
    for j in 0..p {
        let wj = w * x[j];
        for i in 0..p {
            m[(i, j)] += wj * x[i];
        }
    }
}

/// `l_n(beta)` with the default identifiability tolerance.
pub fn pseudo_loglik(data: &Dataset, beta: &DVector<f64>, theta_hat: &MisclassProbs) -> Result<f64> {
    PseudoLikelihood::new(data, *theta_hat).loglik(beta)
}

/// `Z_n(beta)` with the default identifiability tolerance.
pub fn score(data: &Dataset, beta: &DVector<f64>, theta_hat: &MisclassProbs) -> Result<DVector<f64>> {
    PseudoLikelihood::new(data, *theta_hat).score(beta)
}

/// `dZ_n / dbeta` with the default identifiability tolerance.
pub fn score_jacobian(data: &Dataset, beta: &DVector<f64>, theta_hat: &MisclassProbs) -> Result<DMatrix<f64>> {
    PseudoLikelihood::new(data, *theta_hat).jacobian(beta)
}
