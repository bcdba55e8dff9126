use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on shapes or stochasticity was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A model or distribution failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A scalar parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A Gram matrix was too ill-conditioned to invert.
    #[error("conditioning: minimum singular value {sigma_min:e} below threshold {threshold:e}; {hint}")]
    Conditioning {
        sigma_min: f64,
        threshold: f64,
        hint: String,
    },

    /// The chain induced by a policy has no unique stationary distribution.
    #[error("ergodicity: {0}")]
    Ergodicity(String),

    /// KL divergence is infinite because the reference assigns zero mass where the argument does not.
    #[error("infinite divergence at index {index}")]
    InfiniteDivergence { index: usize },

    /// A finite sampler ran out of draws.
    #[error("sampling: {0}")]
    Sampling(String),

    /// A dense solve failed where the math guarantees it should not.
    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    /// Short machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Invalid(_) => "invalid",
            Error::Parameter(_) => "parameter",
            Error::Conditioning { .. } => "conditioning",
            Error::Ergodicity(_) => "ergodicity",
            Error::InfiniteDivergence { .. } => "divergence",
            Error::Sampling(_) => "sampling",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
