use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform for the named operation.
    #[error("{op}: dimension mismatch between {lhs:?} and {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    /// A precondition of the call was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A user-supplied parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Soft-cluster frequency collapsed to zero for a cluster.
    #[error("cluster {cluster} collapsed: soft frequency is zero{}", epoch.map(|e| format!(" at epoch {e}")).unwrap_or_default())]
    DegenerateCluster { cluster: usize, epoch: Option<usize> },

    #[error("{stage}: non-finite loss at epoch {epoch}")]
    Divergence { stage: &'static str, epoch: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::Dimension { op, lhs, rhs }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
