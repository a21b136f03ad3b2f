//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("every eigenvalue of the sensitivity-adjusted covariance is numerically zero")]
    AllZeroSpectrum,

    #[error("chi-square mixture series did not converge in {terms} terms (remaining mass bound {bound:e})")]
    SeriesBudgetExceeded { terms: usize, bound: f64 },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("radial integrand decays too slowly: tail estimate {tail:e} exceeds tolerance")]
    RadialDecayTooSlow { tail: f64 },

    #[error("no solution: G(0) = {g0} is below alpha = {alpha}")]
    NoSolution { alpha: f64, g0: f64 },

    #[error("bracket overflow: G({hi}) = {g_hi} still at or above alpha = {alpha}")]
    BracketOverflow { alpha: f64, hi: f64, g_hi: f64 },

    #[error("root bracket collapsed at R = {r} with |G(R) - alpha| = {residual:e} above tolerance {tol:e}")]
    SolverStalled { r: f64, residual: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoSolution { .. }
            | Error::BracketOverflow { .. }
            | Error::SolverStalled { .. }
            | Error::SeriesBudgetExceeded { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NoConvergence { .. }
            | Error::AllZeroSpectrum
            | Error::RadialDecayTooSlow { .. } => 3,
            Error::Internal(_) => 4,
            Error::InvalidSignature(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidInput(_)
            | Error::Parse { .. }
            | Error::Io(_) => 2,
        }
    }

    /// Short remediation hint printed after the error message.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Error::NoSolution { .. } => Some(
                "the loss region carries less than alpha even at R = 0; choose a larger alpha or check the sign of theta",
            ),
            Error::NotPositiveDefinite { .. } => Some(
                "the covariance matrix must be positive definite; check for duplicated or constant price series",
            ),
            Error::SeriesBudgetExceeded { .. } => Some(
                "eigenvalue magnitudes span too many orders of magnitude; raise the term cap or drop negligible eigenvalues with a larger zero tolerance",
            ),
            Error::BracketOverflow { .. } => Some("G(R) never dropped below alpha; the spectrum may be degenerate"),
            Error::RadialDecayTooSlow { .. } => Some("the radial density has heavy tails; use the Monte Carlo oracle instead"),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
