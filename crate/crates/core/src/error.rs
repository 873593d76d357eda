use thiserror::Error;

/// Errors raised by the spectral machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {re}+{im}i lies on the spectral cut; use the principal-value or boundary-value evaluators")]
    WrongRegion { re: f64, im: f64 },

    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),

    #[error("ill-conditioned contour: {0}")]
    IllConditionedContour(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("pole at eta = mu = {0}; apply the eigenfunction distributionally")]
    Pole(f64),

    #[error("interpolation error: {0}")]
    Interpolation(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
