use std::fmt;

/// CLI failures, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration.
    Usage(String),
    /// Unreadable or unwritable files, malformed images.
    Io(String),
    Solver(hjminplus::Error),
    /// A verification suite reported failures.
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
            CliError::VerifyFailed(n) => write!(f, "verification failed: {n} check(s) did not pass"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hjminplus::Error> for CliError {
    fn from(e: hjminplus::Error) -> Self {
        CliError::Solver(e)
    }
}
