use thiserror::Error;

/// Errors raised by the solver and the certificate checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem parameters: {0}")]
    InvalidParams(String),

    #[error("invalid truncation parameters: {0}")]
    InvalidTruncation(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid initial height d = {0}: must be finite and positive")]
    InvalidHeight(f64),

    #[error("Nehari projection leaves the pure-power regime: t * sup = {scaled_sup} > s0 = {s0}")]
    TruncationRegime { scaled_sup: f64, s0: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("profile I/O: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
