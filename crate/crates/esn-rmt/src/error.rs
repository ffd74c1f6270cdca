use std::path::PathBuf;

use ndarray_linalg::error::LinalgError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("LAPACK failure in {context}: {source}")]
    Linalg {
        context: &'static str,
        #[source]
        source: LinalgError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error("{0} produced non-finite values")]
    Diverged(&'static str),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(arg: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            arg,
            reason: reason.into(),
        }
    }

    /// True for failures that come from an iterative solver running out of budget.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub(crate) trait LinalgContext<T> {
    fn ctx(self, context: &'static str) -> Result<T>;
}

impl<T> LinalgContext<T> for std::result::Result<T, LinalgError> {
    fn ctx(self, context: &'static str) -> Result<T> {
        self.map_err(|source| Error::Linalg { context, source })
    }
}
