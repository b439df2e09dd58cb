use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] plap_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(
                plap_core::Error::InvalidParams(_) | plap_core::Error::InvalidTruncation(_),
            ) => 2,
            CliError::Core(plap_core::Error::InvalidProfile(_)) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const CERTIFICATE: i32 = 3;
    pub const INSUFFICIENT: i32 = 4;
}
