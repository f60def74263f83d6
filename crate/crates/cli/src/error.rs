use std::fmt;
use std::path::Path;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Io,
    Divergence,
    ExternalPrior,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Io => 3,
            ExitKind::Divergence => 4,
            ExitKind::ExternalPrior => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Config,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: ExitKind::Io,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<pcsmri::Error> for CliError {
    fn from(err: pcsmri::Error) -> Self {
        use pcsmri::Error as E;
        let kind = match &err {
            E::Io { .. } | E::Format { .. } => ExitKind::Io,
            E::Divergence { .. } => ExitKind::Divergence,
            E::PriorExecution(_) => ExitKind::ExternalPrior,
            _ => ExitKind::Config,
        };
        Self {
            kind,
            message: err.to_string(),
        }
    }
}
