use thiserror::Error;

/// Errors raised by the spectral substrate, the norm engine, the labs and the solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("coefficients are not Hermitian (defect {defect:.3e}); field would not be real")]
    NotHermitian { defect: f64 },

    #[error("negative time {0} passed to the dissipation semigroup")]
    NegativeTime(f64),

    #[error("unsupported exponent: {0}")]
    UnsupportedExponent(String),

    #[error("could not parse norm spec `{spec}`: {reason}")]
    NormSpecParse { spec: String, reason: String },

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("velocity field is not divergence free (residual {0:.3e})")]
    NotDivergenceFree(f64),

    #[error("non-finite coefficient at t = {t}, mode ({k1}, {k2}, {k3}) of `{field}`")]
    NonFinite {
        t: f64,
        field: String,
        k1: i64,
        k2: i64,
        k3: i64,
    },

    #[error("admission condition violated: {0}")]
    Admission(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
