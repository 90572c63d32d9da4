use std::path::PathBuf;

use thiserror::Error;

/// Everything that ends a run early, with its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    InputFormat { path: PathBuf, message: String },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Numeric(String),

    #[error(transparent)]
    Core(#[from] fei_core::Error),
}

impl CliError {
    /// 2 for anything the caller can fix, 3 for numeric failures inside a run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::InputFormat { .. } => 2,
            CliError::Output { .. } | CliError::Numeric(_) => 3,
            CliError::Core(e) => match e {
                fei_core::Error::SingularDesign { .. } => 3,
                _ => 2,
            },
        }
    }
}

/// Rejects NaN or infinite results so no report carries them.
pub fn ensure_finite(label: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CliError::Numeric(format!("{label} is not finite ({v})"))),
        None => Ok(()),
    }
}
