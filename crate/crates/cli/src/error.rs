use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] trend_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("config {0}: {1}")]
    Config(String, String),
}

impl CliError {
    /// Category label and exit status.
    pub fn category(&self) -> (&'static str, i32) {
        use trend_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(..) => ("usage", EXIT_USAGE),
            CliError::Io(..) => ("io", EXIT_IO),
            CliError::Core(e) => match e {
                E::InvalidParams(_) | E::DimensionMismatch { .. } => ("usage", EXIT_USAGE),
                E::NonConvergence { .. } | E::NotPositiveSemiDefinite { .. } => ("numeric", EXIT_NUMERIC),
                E::Io { .. }
                | E::MalformedHeader(_)
                | E::UnsupportedVersion(_)
                | E::UnsupportedDtype(_)
                | E::TruncatedPayload { .. }
                | E::Parse { .. }
                | E::NonFinite { .. }
                | E::Domain { .. }
                | E::InsufficientSamples { .. }
                | E::Empty(_) => ("input", EXIT_IO),
            },
        }
    }
}
