//! Pseudo-likelihood inference for logistic regression when the binary
//! response is misclassified and a validation subsample records the truth.
//!
//! The crate covers the pseudo maximum likelihood estimator (PMLE) with its
//! plug-in sandwich covariance, a two-sample bootstrap with percentile
//! intervals, the joint and contaminated-data likelihood competitors, the
//! naive logistic fit, group-dependent and one-sided misclassification, and a
//! Monte Carlo harness for coverage and bias studies.

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod error;
pub mod estimators;
pub mod extensions;
pub mod inference;
pub mod io;
pub mod model;
pub mod normal;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod theta;

#[cfg(test)]
pub(crate) mod testutil;

pub use bootstrap::{
    percentile_ci_linear, percentile_ci_risk, run_bootstrap, run_bootstrap_from, BootstrapConfig, BootstrapDraws,
    ReplicateStatus,
};
pub use error::{Error, Result};
pub use estimators::{fit, fit_cmle, fit_jmle, fit_naive, fit_pmle, FitResult, FitWarning, Method};
pub use extensions::{
    fit_pmle_grouped, fit_pmle_theta2_zero, grouped_covariance, theta2_zero_covariance, GroupedCovariance,
    GroupedDataset, GroupedFit,
};
pub use inference::{estimate_bundle, linear_functional_ci, risk_ci_delta, wald_ci, CovarianceBundle};
pub use model::{
    h1, h2, h3, log_one_minus_psi, log_psi, pseudo_loglik, psi, score, score_jacobian, Dataset, MisclassProbs,
    NonValidationObs, PseudoLikelihood, ThetaBox, ValidationObs, DEFAULT_IDENT_TOL,
};
pub use nalgebra;
pub use sim::{generate_dataset, run_bias_mse_study, run_coverage_study, sigma_of_eta, SimConfig, SimModel};
pub use solver::{newton_root, Diagnostics, FnSystem, RootSystem, SolverOptions};
pub use theta::{
    count_cells, count_dataset_cells, estimate_theta, estimate_theta_from, theta_asymptotic_cov, CellCounts,
    ThetaEstimate,
};
