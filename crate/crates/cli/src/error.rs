use serde_json::{json, Value};
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fbtc_core::Error),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{} trajectories failed", .0.len())]
    InvalidTrajectories(Vec<fbtc_core::Error>),

    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Parse { .. } => "ParseError",
            CliError::Io { .. } => "IoError",
            CliError::Config(_) => "ConfigError",
            CliError::InvalidTrajectories(_) => "InvalidTrajectories",
            CliError::Mismatch(_) => "Mismatch",
        }
    }

    /// Machine-readable form printed on stderr when a command fails.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            CliError::Core(fbtc_core::Error::Stage { stage, .. }) => {
                v["stage"] = json!(stage);
            }
            CliError::InvalidTrajectories(errors) => {
                let items: Vec<Value> = errors
                    .iter()
                    .map(|e| match e {
                        fbtc_core::Error::Trajectory { id, source } => {
                            json!({ "id": id, "error": source.kind(), "message": source.to_string() })
                        }
                        other => json!({ "error": other.kind(), "message": other.to_string() }),
                    })
                    .collect();
                v["trajectories"] = Value::Array(items);
            }
            CliError::Parse { line, column, .. } => {
                v["line"] = json!(line);
                v["column"] = json!(column);
            }
            _ => {}
        }
        v
    }
}
