use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e}")]
    HermitianViolation { deviation: f64 },
    #[error("trace deviates from one by {deviation:e}")]
    TraceViolation { deviation: f64 },
    #[error("negative eigenvalue {min_eigenvalue:e} exceeds clamping tolerance")]
    NegativeEigenvalue { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("reference state is singular: min eigenvalue {min_eigenvalue:e}")]
    SingularReference { min_eigenvalue: f64 },
    #[error("state is not full rank: min eigenvalue {min_eigenvalue:e}")]
    NotFullRank { min_eigenvalue: f64 },
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid outcome distribution: {0}")]
    InvalidDistribution(String),
    #[error("alternative set must have at least one vertex")]
    EmptySet,
    #[error("null state lies in alternative set")]
    NullInsideSet,
    #[error("state lies outside the alternative set")]
    OutsideSet,
    #[error("vertex grid cannot place {requested} atoms on {vertices} vertices")]
    GridTooCoarse { requested: usize, vertices: usize },
    #[error("tau = {tau} must lie in (0, {limit})")]
    TauOutOfRange { tau: f64, limit: f64 },
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("outcome {outcome} has zero probability under {which}")]
    ZeroProbabilityOutcome { outcome: usize, which: &'static str },
    #[error("probe grid is empty")]
    EmptyGrid,
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
