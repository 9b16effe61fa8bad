use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the prototype learning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty feature set")]
    EmptyFeatureSet,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("label not a distribution: {0}")]
    InvalidLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gradients with respect to the codebook require soft encoding")]
    HardModeGradient,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
