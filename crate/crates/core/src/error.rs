use thiserror::Error;

/// Errors raised by the walk, Green-function and Martin-kernel routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The geometric domination p_{phi^n}(s,t) <= C(s,t) lambda^n needs lambda < 1.
    #[error("transience not certified: decay rate {rate} is not below 1")]
    TransienceNotCertified { rate: f64 },

    #[error("functional is not generating: no half-integer spin carries positive weight")]
    NotGenerating,

    /// A Martin quotient whose denominator is not separated from its own truncation bound.
    #[error("undercertified division at twice-spin {label}: g = {value:e}, tail bound = {bound:e}")]
    Undercertified { label: u32, value: f64, bound: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
