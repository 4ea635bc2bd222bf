use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration value; `path` is the dotted key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed trace file: {0}")]
    Trace(String),

    #[error(transparent)]
    Core(#[from] cfres_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
