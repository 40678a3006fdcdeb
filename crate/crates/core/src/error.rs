//! Crate-wide error type.

/// Everything that can go wrong while building or validating operators,
/// subspaces, and paths.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ambient dimensions disagree: {0} vs {1}")]
    AmbientMismatch(usize, usize),

    #[error("subspace dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("subspaces are not complementary: {0}")]
    NotComplementary(String),

    #[error("operand shapes disagree: {0}")]
    ShapeMismatch(String),

    #[error("matrix is numerically singular (sigma ratio {ratio:.3e}, tol {tol:.3e})")]
    NumericallySingular { ratio: f64, tol: f64 },

    #[error("path parameter {0} outside [0, 1]")]
    OutOfDomain(f64),

    #[error("no spare direction: the range already fills the codomain")]
    NoSpareDirection,

    #[error("flip direction lies outside the range (residual {0:.3e})")]
    NotInRange(f64),

    #[error("operator ranks disagree: {0} vs {1}")]
    RankMismatch(usize, usize),

    #[error("stratum is disconnected between these operators: {0}")]
    StratumDisconnected(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("Fredholm data mismatch: {0}")]
    FredholmDataMismatch(String),

    #[error("infeasible {side} hop at step {index}: dimensions {left} vs {right}")]
    InfeasibleHop {
        side: &'static str,
        index: usize,
        left: usize,
        right: usize,
    },

    #[error("equivalence chain invalid: {0}")]
    ChainInvalid(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("non-finite entry in matrix data")]
    NonFinite,

    #[error("unsupported or malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<V> = std::result::Result<V, Error>;
