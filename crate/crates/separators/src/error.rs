use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// The loaded parameters do not fit the model configuration.
    #[error("checkpoint does not match the model:\n{}", .diffs.join("\n"))]
    CheckpointMismatch { diffs: Vec<String> },

    #[error("covariance is singular after diagonal loading (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error(
        "loss became {loss} at epoch {epoch}, step {step} with learning rate {lr:e}; \
         lower the learning rate (try {suggested:e}) or tighten gradient clipping"
    )]
    Diverged { epoch: usize, step: usize, loss: f64, lr: f64, suggested: f64 },

    #[error(transparent)]
    Signal(#[from] rfsep_core::Error),

    #[error(transparent)]
    Tensor(#[from] rfsep_autograd::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! config {
    ($($arg:tt)*) => {
        $crate::error::Error::Config(format!($($arg)*))
    };
}
pub(crate) use config;
