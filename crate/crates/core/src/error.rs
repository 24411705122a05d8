use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain (e.g. a non-positive index).
    #[error("domain error: {0}")]
    Domain(String),
    /// Construction parameters violate a required inequality.
    #[error("construction error: {0}")]
    Construction(String),
    /// The annulus neck collapsed during descent; no minimal annulus at these parameters.
    #[error("neck pinch: minimal cross-section length {min_length:.3e} fell below {tol:.1e}; try smaller eps1/del1 ratio or a lower cut height")]
    NeckPinch { min_length: f64, tol: f64 },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
