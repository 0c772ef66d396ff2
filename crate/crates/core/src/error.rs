use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation outside the domain `v + v_g > 0` or with an invalid argument.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Evaluation refused because the point is too close to a Takens-Bogdanov point.
    #[error("too close to a Takens-Bogdanov point (omega0 = {omega0:e})")]
    NearBt { omega0: f64 },

    /// An iterative solver did not converge.
    #[error("no convergence in {what} after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A bracketing search found no sign change.
    #[error("bracket failure: {0}")]
    Bracket(String),

    /// The PDE integration became unstable.
    #[error("PDE instability at t = {t} h: {reason}")]
    Instability { t: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
