use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical blow-up at t = {time}: {message}")]
    BlowUp { time: f64, message: String },

    #[error(
        "iteration did not converge after {iters} sweeps (last contraction ratio {last_ratio:e})"
    )]
    NonConvergence { iters: usize, last_ratio: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit-code class: 1 for configuration/input problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::InvalidInput(_) | Error::Io(_) => 1,
            Error::BlowUp { .. } | Error::NonConvergence { .. } => 2,
        }
    }

    /// Short machine-readable code written to stderr by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "config-error",
            Error::Parse { .. } => "parse-error",
            Error::InvalidInput(_) => "input-error",
            Error::BlowUp { .. } => "numeric-error",
            Error::NonConvergence { .. } => "iteration-error",
            Error::Io(_) => "io-error",
        }
    }
}
