use std::fmt;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config values or infeasible problem settings (exit 2).
    Usage(String),
    /// Unreadable or unwritable files, malformed inputs (exit 2).
    Io(String),
    /// Divergence, non-finite iterates, failed internal checks (exit 1).
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tt_complete::Error> for CliError {
    fn from(e: tt_complete::Error) -> Self {
        use tt_complete::Error as E;
        match e {
            E::Io(_) | E::Format(_) => CliError::Io(e.to_string()),
            E::Domain(_) | E::ShapeMismatch(_) | E::Capacity(_) => CliError::Usage(e.to_string()),
            E::Divergence(_) | E::NonFinite(_) | E::Contract(_) | E::Consistency(_) => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
