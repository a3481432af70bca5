use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("config line {line}, key `{key}`: {msg}")]
    Key { line: usize, key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{0}")]
    Usage(String),
    #[error("row has {got} entries, table has {want} columns")]
    RowWidth { got: usize, want: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] viscowave::Error),
}

impl CliError {
    /// 2 for anything traceable to the invocation or the config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use viscowave::Error as E;
        match self {
            CliError::Io { .. }
            | CliError::Syntax { .. }
            | CliError::Key { .. }
            | CliError::Invalid(_)
            | CliError::Usage(_) => 2,
            CliError::Core(E::InvalidParameter { .. } | E::MissingParameter(_) | E::Precondition(_)) => 2,
            _ => 1,
        }
    }
}
