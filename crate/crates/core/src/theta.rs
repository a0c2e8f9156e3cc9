//! Misclassification rates estimated from the validation sample.

use nalgebra::{DMatrix, Matrix2, Matrix2x3, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, MisclassProbs, ValidationObs};

/// Cross-tabulation of `(Ỹ, Y)` over the validation sample.
///
/// `nab` counts rows with `Ỹ = a` and `Y = b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
    pub n1: u64,
}

impl CellCounts {
    pub fn from_cells(n00: u64, n01: u64, n10: u64, n11: u64) -> Self {
        Self { n00, n01, n10, n11, n1: n00 + n01 + n10 + n11 }
    }

    fn add(&mut self, y: bool, ytilde: bool) {
        match (ytilde, y) {
            (false, false) => self.n00 += 1,
            (false, true) => self.n01 += 1,
            (true, false) => self.n10 += 1,
            (true, true) => self.n11 += 1,
        }
        self.n1 += 1;
    }
}

pub fn count_cells(validation: &[ValidationObs]) -> Result<CellCounts> {
    if validation.is_empty() {
        return Err(Error::InvalidInput("validation sample is empty".into()));
    }
    let mut c = CellCounts::default();
    for obs in validation {
        c.add(obs.y, obs.ytilde);
    }
    Ok(c)
}

/// Cell counts of a dataset's validation rows.
pub fn count_dataset_cells(data: &Dataset) -> Result<CellCounts> {
    data.require_validation()?;
    let mut c = CellCounts::default();
    for row in data.validation() {
        c.add(row.y, row.ytilde);
    }
    Ok(c)
}

/// Haldane-corrected rates together with the raw cell frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta: MisclassProbs,
    pub n1: u64,
    pub cells: CellCounts,
    /// Fraction of validation rows with `Y = 1`.
    pub a0_hat: f64,
    /// Raw frequencies of `(Ỹ, Y) = (0,0), (0,1), (1,0), (1,1)`.
    pub pi_hat: [f64; 4],
}

pub fn estimate_theta(cells: CellCounts) -> Result<ThetaEstimate> {
    let CellCounts { n00, n01, n10, n11, n1 } = cells;
    if n1 == 0 || n1 != n00 + n01 + n10 + n11 {
        return Err(Error::InvalidInput(format!("inconsistent cell counts {cells:?}")));
    }
    let f = |k: u64| k as f64;
    let theta1 = (0.5 + f(n10)) / (1.0 + f(n00) + f(n10));
    let theta2 = (0.5 + f(n01)) / (1.0 + f(n01) + f(n11));
    let total = f(n1);
    let pi_hat = [f(n00) / total, f(n01) / total, f(n10) / total, f(n11) / total];
    Ok(ThetaEstimate { theta: MisclassProbs::new(theta1, theta2), n1, cells, a0_hat: f(n01 + n11) / total, pi_hat })
}

pub fn estimate_theta_from(data: &Dataset) -> Result<ThetaEstimate> {
    estimate_theta(count_dataset_cells(data)?)
}

/// Margin kept between `a0` and the ends of `[0, 1]` before the delta method is refused.
pub const A0_MARGIN: f64 = 1e-6;

/// Jacobian of `(pi1, pi2, pi3) -> (pi3 / (pi1 + pi3), pi2 / (1 - pi1 - pi3))`
/// written in terms of `a0 = 1 - pi1 - pi3`.
pub fn b0(a0: f64, pi2: f64, pi3: f64) -> Matrix2x3<f64> {
    let q = 1.0 - a0;
    Matrix2x3::new(-pi3 / (q * q), 0.0, (q - pi3) / (q * q), pi2 / (a0 * a0), 1.0 / a0, pi2 / (a0 * a0))
}

/// Covariance of one row's indicator vector `(V1, V2, V3)`.
pub fn sigma22(a0: f64, pi2: f64, pi3: f64) -> Matrix3<f64> {
    let pi1 = 1.0 - a0 - pi3;
    Matrix3::new(
        pi1 * (1.0 - pi1),
        -pi1 * pi2,
        -pi1 * pi3,
        -pi1 * pi2,
        pi2 * (1.0 - pi2),
        -pi2 * pi3,
        -pi1 * pi3,
        -pi2 * pi3,
        pi3 * (1.0 - pi3),
    )
}

impl ThetaEstimate {
    fn check_a0(&self) -> Result<()> {
        if !(self.a0_hat > A0_MARGIN && self.a0_hat < 1.0 - A0_MARGIN) {
            return Err(Error::Degenerate(format!(
                "validation fraction with Y = 1 is {}; need it inside (0, 1)",
                self.a0_hat
            )));
        }
        Ok(())
    }

    pub fn b0(&self) -> Result<Matrix2x3<f64>> {
        self.check_a0()?;
        Ok(b0(self.a0_hat, self.pi_hat[1], self.pi_hat[2]))
    }

    pub fn sigma22(&self) -> Matrix3<f64> {
        sigma22(self.a0_hat, self.pi_hat[1], self.pi_hat[2])
    }

    /// `B0 Sigma22 B0'`, the limiting covariance of `sqrt(n1) (theta_hat - theta0)`.
    pub fn limit_cov(&self) -> Result<Matrix2<f64>> {
        let b = self.b0()?;
        let m = b * self.sigma22() * b.transpose();
        Ok(0.5 * (m + m.transpose()))
    }
}

/// Plug-in covariance of `theta_hat`, `B0 Sigma22 B0' / n1`.
pub fn theta_asymptotic_cov(est: &ThetaEstimate) -> Result<DMatrix<f64>> {
    let m = est.limit_cov()? / est.n1 as f64;
    Ok(DMatrix::from_column_slice(2, 2, m.as_slice()))
}
