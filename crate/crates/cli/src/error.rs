use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<mde_core::Error> for CliError {
    fn from(err: mde_core::Error) -> Self {
        use mde_core::Error as E;
        match err {
            E::Io(msg) => CliError::Io(msg),
            E::Parse(msg) => CliError::Io(format!("bad snapshot: {msg}")),
            E::GridOverflow { .. }
            | E::GridTooCoarse { .. }
            | E::PositivityViolation(_)
            | E::SourceMismatch => CliError::Numerical(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
