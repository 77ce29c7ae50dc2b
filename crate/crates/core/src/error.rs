use thiserror::Error;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Infeasible,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("insufficient universe: {found} scorable assets, need at least {required}")]
    InsufficientUniverse { found: usize, required: usize },

    #[error("degenerate sort: corner bucket {0} is empty")]
    DegenerateSort(&'static str),

    #[error("insufficient sample: {found} observations, need at least {required}")]
    InsufficientSample { found: usize, required: usize },

    #[error("collinear design matrix: {0}")]
    Collinearity(String),

    #[error("misaligned samples: {0}")]
    Alignment(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("estimation failed after {iterations} iterations: {reason} (best objective {best_objective})")]
    Estimation {
        reason: String,
        iterations: u64,
        best_objective: f64,
        best_params: Vec<f64>,
    },

    #[error("singular update: denominator {denominator:e}")]
    Singular { denominator: f64 },

    #[error("optimization infeasible: {0}")]
    Infeasible(String),

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("empty universe: {0}")]
    EmptyUniverse(String),

    #[error("unmapped asset: {0}")]
    Mapping(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate entry at row {row}: {key}")]
    Duplicate { row: usize, key: String },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Infeasible(_) | Error::EmptyUniverse(_) => ErrorKind::Infeasible,
            Error::Collinearity(_)
            | Error::Estimation { .. }
            | Error::Singular { .. }
            | Error::NotConverged(_)
            | Error::DegenerateData(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
