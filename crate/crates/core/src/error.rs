use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants are grouped so that a driver can map them onto exit codes:
/// parameter-like failures (`Parameter`, `Domain`, `Lookup`) versus
/// numerical-quality failures (`Fit`, `Window`, `Convergence`, `Envelope`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("envelope violated: {0}")]
    Envelope(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by invalid user input rather than numerical
    /// trouble.
    pub fn is_parameter_like(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Domain(_) | Error::Lookup(_) | Error::Json(_)
        )
    }
}
