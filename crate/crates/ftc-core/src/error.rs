//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FtcError {
    /// A caller violated a documented precondition or an input violated a
    /// type invariant. The message names the offending quantity.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed input file; carries file path and 1-based line number.
    #[error("parse error: {file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    /// Non-finite values appeared during numeric evaluation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FtcError {
    pub fn contract(msg: impl Into<String>) -> Self {
        FtcError::Contract(msg.into())
    }

    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        FtcError::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, FtcError>;
