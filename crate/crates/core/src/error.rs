use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (t <= 0, s < 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters or shapes that the caller got wrong.
    #[error("usage error: {0}")]
    Usage(String),

    /// The grid cannot represent the requested spectral operation without aliasing.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A quadrature or series failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Transform identity evaluated too close to the pole s = psi^n.
    #[error("pole error: |s - psi^n| = {distance:e} is below {threshold:e}")]
    Pole { distance: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
