use thiserror::Error;

/// Errors produced by the simulation and verification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is malformed, inconsistent, or missing.
    #[error("configuration error: {0}")]
    Config(String),

    /// A tabulated quantity was requested outside its sampled range.
    #[error("argument {value} outside tabulated range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },

    /// The requested quantity is not available for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An adaptive quadrature or iterative procedure failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The covariance model violates a structural requirement.
    #[error("model error: {0}")]
    Model(String),

    /// A grid cannot resolve the oscillation an evaluator needs.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A statistic is undefined for the supplied data.
    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    /// A combinatorial or solver size guard was exceeded.
    #[error("size guard exceeded: {0}")]
    Size(String),

    /// An evolution left its stability envelope.
    #[error("instability: {0}")]
    Instability(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
