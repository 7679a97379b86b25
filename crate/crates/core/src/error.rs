use thiserror::Error;

/// Errors shared across the crate.
///
/// Rejection of a coefficient sequence is *not* an error: it is a value
/// (see [`crate::params::AdmissibilityCertificate`]). Errors here are
/// precondition violations and numerical failures.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Evaluation was requested on (or too close to) a singular subspace.
    #[error("point lies on the singular set S_{index} (|X_{index}| = {distance:e})")]
    SingularPoint { index: usize, distance: f64 },

    /// The integrand is non-integrable with the declared singularity powers.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// The quadrature budget was exhausted before reaching the tolerance.
    /// Carries the best estimate obtained so far.
    #[error("quadrature budget exhausted (best value {value}, error estimate {error_estimate})")]
    QuadratureBudget {
        value: f64,
        error_estimate: f64,
        evaluations: u64,
    },

    /// The iterative eigensolver did not reach its tolerance.
    /// Carries the best iterate.
    #[error("eigensolver did not converge after {iterations} iterations (lambda {lambda}, residual {residual})")]
    NonConvergence {
        lambda: f64,
        residual: f64,
        iterations: usize,
    },

    /// The shifted quadratic form K - sum(beta_m M_m) is indefinite on this
    /// grid. Carries the (negative) probe value.
    #[error("shifted numerator form is indefinite on this grid (probe eigenvalue {probe})")]
    IndefiniteForm { probe: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
