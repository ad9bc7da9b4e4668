use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("subsystem dims {dims:?} do not multiply to matrix size {size}")]
    BadDims { dims: Vec<usize>, size: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("channel probabilities sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("projector is not a rank-1 orthogonal projector: {0}")]
    InvalidProjector(String),

    #[error("no sign change of the PT eigenvalue over the feasible range: {0}")]
    NoSignChange(Bracket),

    #[error("min PT eigenvalue is not monotone in P_S on the bracket")]
    NotMonotone,

    #[error("heralding outcome has zero probability")]
    ZeroWeight,

    #[error("empty coincidence tally")]
    EmptyTally,

    #[error("tallies were produced with different rate configurations")]
    MismatchedConfigs,

    #[error("count table incomplete: {0}")]
    IncompleteTable(String),

    #[error("parse error: {0}")]
    Parse(String),
}

/// Outcome of a boundary search that found no crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    AlwaysEntangled,
    NeverEntangled,
}

impl std::fmt::Display for Bracket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bracket::AlwaysEntangled => f.write_str("always entangled"),
            Bracket::NeverEntangled => f.write_str("never entangled"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}
