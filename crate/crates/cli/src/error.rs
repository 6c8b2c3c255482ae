/// Failures of the runner, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration or command line is unusable. Exit status 1.
    #[error("{0}")]
    Config(String),
    /// The experiment or an output write failed. Exit status 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

impl From<goar_core::Error> for CliError {
    fn from(e: goar_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
