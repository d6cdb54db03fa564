use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular value decomposition did not converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("singular values must be nonnegative and sorted in nonincreasing order (index {index})")]
    UnsortedSpectrum { index: usize },

    #[error("column {column} of the right-hand side lies outside the column space (residual {residual:e})")]
    OutsideColumnSpace { column: usize, residual: f64 },

    #[error("all observations are zero; the data-driven lambda is undefined, use an oracle or manual lambda")]
    ZeroObservations,

    #[error("the noise matrix M is zero; delta and the oracle lambda are undefined")]
    ZeroNoiseMatrix,

    #[error("rho must lie in [0, 1), got {0}")]
    RhoOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
