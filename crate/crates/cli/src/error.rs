use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("formalism: {0}")]
    Formalism(#[from] twostate_core::Error),
}

impl CliError {
    /// 2 for configuration and IO problems, 3 for errors raised by the
    /// formalism itself.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Formalism(_) => 3,
        }
    }
}
