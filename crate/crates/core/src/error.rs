use thiserror::Error;

use crate::poly::RealPolynomial;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root finding did not converge for polynomial {poly:?}")]
    RootsNotConverged { poly: RealPolynomial },

    #[error("stability classification failed: {reason} (characteristic polynomial {poly:?})")]
    Classification { reason: String, poly: RealPolynomial },

    #[error("integration failed at t = {time:e} s: {reason}")]
    Integration { time: f64, reason: String },

    #[error("sweep failed at axis value {axis_value:e}: {source}")]
    Sweep {
        axis_value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no stable branch at axis value {axis_value:e} (self-oscillation regime?)")]
    NoStableBranch { axis_value: f64 },

    #[error("config error{}: {message}", line_suffix(*line))]
    Config { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidArgument(_) => 2,
            Error::Io { .. } => 4,
            Error::Sweep { source, .. } => source.exit_code().max(3),
            _ => 3,
        }
    }

    pub(crate) fn at_axis(self, axis_value: f64) -> Self {
        match self {
            e @ (Error::Sweep { .. } | Error::NoStableBranch { .. }) => e,
            e => Error::Sweep {
                axis_value,
                source: Box::new(e),
            },
        }
    }
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}
