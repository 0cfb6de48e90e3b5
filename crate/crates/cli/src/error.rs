use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration at `{field}`: {msg}")]
    ConfigInvalid { field: String, msg: String },
    #[error("i/o error on {path}: {source}")]
    IoError {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        CliError::ConfigInvalid { field: field.to_string(), msg: msg.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::IoError { path: path.into(), source }
    }

    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } => 2,
            CliError::IoError { .. } => 3,
        }
    }
}
