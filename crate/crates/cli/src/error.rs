use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{field}: {reason}")]
    Config { field: String, reason: String },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("unknown table {0:?} (known: {known})", known = crate::experiments::names().join(", "))]
    UnknownTable(String),
    #[error("benchmark must be nonzero to form an error ratio")]
    ZeroBenchmark,
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: american_fbsde::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialising output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Attaches a location to an engine error; parameter errors become
/// field-level configuration errors.
pub(crate) fn core(context: impl Into<String>, e: american_fbsde::Error) -> CliError {
    let context = context.into();
    match e {
        american_fbsde::Error::InvalidParameter { name, reason } => config(format!("{context}.{name}"), reason),
        source => CliError::Core { context, source },
    }
}
