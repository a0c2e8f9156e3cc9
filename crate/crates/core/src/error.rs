use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input file does not follow the expected layout.
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("misclassification rates not identifiable: |1 - theta1 - theta2| = {gap:.3e} <= {tol:.1e}")]
    Identifiability { gap: f64, tol: f64 },

    #[error("group {group}: {source}")]
    InGroup {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate plug-in: {0}")]
    Degenerate(String),

    #[error("singular jacobian (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("singular Zdot (condition estimate {condition:.3e})")]
    SingularZdot { condition: f64 },

    #[error("no convergence after {iterations} iterations (residual max-norm {residual_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        residual_norm: f64,
        /// Last iterate reached by the solver.
        last: Vec<f64>,
    },

    #[error("only {ok} of {total} bootstrap replicates succeeded (need fraction {required})")]
    InsufficientSuccesses { ok: usize, total: usize, required: f64 },
}

impl Error {
    /// Strips any group tag.
    pub fn root(&self) -> &Error {
        match self {
            Error::InGroup { source, .. } => source.root(),
            other => other,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::Schema(_) => "SCHEMA",
            Error::Identifiability { .. } => "IDENTIFIABILITY",
            Error::InGroup { .. } => unreachable!("root strips group tags"),
            Error::Domain(_) => "DOMAIN",
            Error::Degenerate(_) => "DEGENERATE",
            Error::SingularJacobian { .. } => "SINGULAR_JACOBIAN",
            Error::SingularZdot { .. } => "SINGULAR_ZDOT",
            Error::NonConvergence { .. } => "NON_CONVERGENCE",
            Error::InsufficientSuccesses { .. } => "INSUFFICIENT_SUCCESSES",
        }
    }

    pub fn is_identifiability(&self) -> bool {
        matches!(self.root(), Error::Identifiability { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
