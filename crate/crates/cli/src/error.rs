use std::path::PathBuf;

use serde_json::json;
use snac_core::{SnacError, SCHEMA_VERSION};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] SnacError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    /// A report describing the failure was already written.
    #[error("validation failed")]
    Reported,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(SnacError::Io(_)) | CliError::Io { .. } => EXIT_IO,
            CliError::Domain(_) | CliError::Reported => EXIT_DOMAIN,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }

    pub fn report(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Domain(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Reported => "validation",
        };
        let mut error = json!({ "kind": kind, "message": self.to_string() });
        if let CliError::Domain(SnacError::Validation(v)) = self {
            error["violations"] = json!(v);
        }
        json!({ "schema_version": SCHEMA_VERSION, "error": error })
    }
}

pub type CliResult<T> = Result<T, CliError>;
