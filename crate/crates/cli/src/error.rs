use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config field `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("solver failure: {0}")]
    Solver(#[from] plateflow::Error),

    #[error("io error at {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

impl CliError {
    pub fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Parse(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
