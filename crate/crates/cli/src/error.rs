use std::path::PathBuf;

use thiserror::Error;

use nullfrenet_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("malformed input {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("extraction failed at sigma = {sigma}: {source}")]
    Extraction { sigma: f64, source: CoreError },

    #[error("integration blew up after sigma = {last_sigma}; partial output kept")]
    BlowUp { last_sigma: f64 },

    #[error("conserved charges drifted beyond {threshold:e}: {names}")]
    Drift { threshold: f64, names: String },

    #[error("verification failed: {0}")]
    Verify(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Process exit status: 1 malformed input, 2 extraction failure,
    /// 3 blow-up, 4 charge drift, 5 failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Config { .. } | CliError::Input { .. } => 1,
            CliError::Extraction { .. } => 2,
            CliError::BlowUp { .. } => 3,
            CliError::Drift { .. } => 4,
            CliError::Verify(_) => 5,
            CliError::Core(e) => match e {
                CoreError::DegenerateCurve { .. }
                | CoreError::NotNull { .. }
                | CoreError::NegativeRadicand { .. }
                | CoreError::ExtractionFailure { .. } => 2,
                CoreError::BlowUp { .. } => 3,
                _ => 1,
            },
        }
    }
}
