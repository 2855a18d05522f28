use thiserror::Error;

/// Errors raised by graph construction, operator assembly and the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation would exceed a configured resource cap.
    #[error("resource limit: {what} would exceed the cap of {cap} ({hint})")]
    Resource {
        what: String,
        cap: usize,
        hint: String,
    },

    /// An iterative method stopped before reaching its tolerance.
    #[error("numeric failure in {method}: achieved residual {residual:.3e} after {iterations} iterations")]
    Numeric {
        method: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// The requested error budget cannot be certified on the given truncation.
    #[error("budget {budget:.3e} not certifiable (certified error {certified:.3e}); a truncation radius of at least {required_radius} is needed")]
    Budget {
        budget: f64,
        certified: f64,
        required_radius: usize,
    },

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Invalid experiment configuration.
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
