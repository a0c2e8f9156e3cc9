//! Damped Newton root finding.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number above which a Jacobian is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Maximum number of step halvings per iteration.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Success when the residual max-norm drops to this.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting coefficients; the naive fit is used when absent.
    pub start: Option<Vec<f64>>,
    /// Step contraction factor for the backtracking line search.
    pub damping: f64,
    /// Cap on the Euclidean length of a single Newton step.
    pub max_step: f64,
    /// Smallest admissible `|1 - theta1 - theta2|`.
    pub ident_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            start: None,
            damping: 0.5,
            max_step: 10.0,
            ident_tol: crate::model::DEFAULT_IDENT_TOL,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter < 1 {
            return Err(Error::InvalidInput("solver needs tol > 0 and max_iter >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidInput(format!("damping {} outside (0, 1)", self.damping)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput("max_step must be positive".into()));
        }
        if !(self.ident_tol >= 0.0) {
            return Err(Error::InvalidInput("ident_tol must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_start(mut self, start: &DVector<f64>) -> Self {
        self.start = Some(start.as_slice().to_vec());
        self
    }
}

/// A square nonlinear system `r(x) = 0` with its Jacobian.
pub trait RootSystem {
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Adapter turning a pair of closures into a [`RootSystem`].
pub struct FnSystem<R, J> {
    pub residual: R,
    pub jacobian: J,
}

impl<R, J> RootSystem for FnSystem<R, J>
where
    R: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (self.residual)(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        (self.jacobian)(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Max-norm of the residual at the returned point.
    pub residual_norm: f64,
    pub step_cap_hit: bool,
    /// Largest Euclidean norm of any accepted iterate.
    pub max_iterate_norm: f64,
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Condition number of `m` in the 2-norm, `inf` when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let sv = m.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `J d = rhs`, refusing ill-conditioned `J`.
pub fn checked_solve(j: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let condition = condition_number(j);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularJacobian { condition });
    }
    j.clone().lu().solve(rhs).ok_or(Error::SingularJacobian { condition: f64::INFINITY })
}

/// Damped Newton iteration from `start`.
///
/// Each step `-J^{-1} r` is capped at `max_step` and halved until the residual's
/// Euclidean norm decreases. Stops when the residual max-norm is at most `tol`.
pub fn newton_root<S: RootSystem + ?Sized>(
    system: &S,
    start: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, Diagnostics)> {
    opts.validate()?;
    let mut x = start.clone();
    let mut r = system.residual(&x)?;
    if r.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: r.len() });
    }
    if !finite(&r) {
        return Err(Error::Domain("residual is not finite at the starting point".into()));
    }
    let mut diag =
        Diagnostics { iterations: 0, residual_norm: max_norm(&r), step_cap_hit: false, max_iterate_norm: x.norm() };
    let fail = |x: &DVector<f64>, diag: &Diagnostics| Error::NonConvergence {
        iterations: diag.iterations,
        residual_norm: diag.residual_norm,
        last: x.as_slice().to_vec(),
    };
    while diag.iterations < opts.max_iter {
        if diag.residual_norm <= opts.tol {
            polish(system, &mut x, &mut r, &mut diag);
            return Ok((x, diag));
        }
        diag.iterations += 1;
        let j = system.jacobian(&x)?;
        let mut step = -checked_solve(&j, &r)?;
        let len = step.norm();
        if len > opts.max_step {
            step *= opts.max_step / len;
            diag.step_cap_hit = true;
        }
        let current = r.norm();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + t * &step;
            if let Ok(rt) = system.residual(&trial) {
                if finite(&rt) && rt.norm() < current {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= opts.damping;
        }
        match accepted {
            Some((xn, rn)) => {
                x = xn;
                r = rn;
                diag.residual_norm = max_norm(&r);
                diag.max_iterate_norm = diag.max_iterate_norm.max(x.norm());
            }
            // The line search stalled; further iterations would repeat it.
            None => return Err(fail(&x, &diag)),
        }
    }
    if diag.residual_norm <= opts.tol {
        polish(system, &mut x, &mut r, &mut diag);
        return Ok((x, diag));
    }
    Err(fail(&x, &diag))
}

/// One extra full Newton step once the tolerance is met, kept only if it does
/// not increase the residual. In the quadratic regime this takes the root to
/// near machine precision, so fits started from different points agree far
/// more closely than `tol`.
fn polish<S: RootSystem + ?Sized>(system: &S, x: &mut DVector<f64>, r: &mut DVector<f64>, diag: &mut Diagnostics) {
    let Ok(j) = system.jacobian(x) else { return };
    let Ok(step) = checked_solve(&j, r) else { return };
    let trial = &*x - step;
    if let Ok(rt) = system.residual(&trial) {
        if finite(&rt) && max_norm(&rt) <= diag.residual_norm {
            *x = trial;
            *r = rt;
            diag.residual_norm = max_norm(r);
        }
    }
}
