use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    /// The report was written before this is returned.
    #[error("stream is not real-time feasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Separator(#[from] rfsep_separators::Error),
    #[error(transparent)]
    Core(#[from] rfsep_core::Error),
    #[error("{path}: {source}")]
    File { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 configuration, 3 data, 4 real-time infeasible, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use rfsep_separators::Error as S;
        match self {
            CliError::Config(_) | CliError::Separator(S::Config(_)) => 2,
            CliError::Core(rfsep_core::Error::Invalid(_)) => 2,
            CliError::Infeasible(_) => 4,
            CliError::Data(_)
            | CliError::File { .. }
            | CliError::Separator(S::CheckpointMismatch { .. } | S::Input(_) | S::Io(_) | S::Json(_))
            | CliError::Core(rfsep_core::Error::Format { .. } | rfsep_core::Error::UnsupportedAudio(_) | rfsep_core::Error::Io(_)) => 3,
            _ => 1,
        }
    }
}
