use thiserror::Error;

/// Errors surfaced by every module of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty sample: at least one row is required")]
    EmptySample,
    #[error("zero-dimensional sample: at least one coordinate is required")]
    EmptyDimension,
    #[error("sample length {len} is not a multiple of dimension {dim}")]
    RaggedData { len: usize, dim: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("row-count mismatch: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },
    #[error("sample too small: need at least {need} rows, got {got}")]
    SampleTooSmall { need: usize, got: usize },
    #[error("shifted pairing needs an even row count, got {0}")]
    OddSampleSize(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("distance order must be finite and at least 1, got {0}")]
    InvalidDistanceOrder(f64),
    #[error("variance must be positive and finite, got {0}")]
    InvalidVariance(f64),
    #[error("the {family} kernel does not support differentiation")]
    UnsupportedDerivative { family: String },
    #[error("score dimension {score} does not match data dimension {data}")]
    ScoreDimensionMismatch { score: usize, data: usize },
    #[error("score model produced a non-finite value at coordinate {0}")]
    NonFiniteScore(usize),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("degenerate normalizer for kernel {kernel_index}: sigma {sigma:e} is below the floor {floor:e}")]
    DegenerateSigma {
        kernel_index: usize,
        sigma: f64,
        floor: f64,
    },
    #[error("kernel collection is empty")]
    EmptyCollection,
    #[error("empty distance set: all pairwise distances are zero")]
    EmptyDistanceSet,
    #[error("invalid pooling request: {0}")]
    InvalidPooling(String),
    #[error("non-finite statistic value at position {0}")]
    NonFiniteStatistic(usize),
    #[error("oracle input of {got} rows exceeds the cap of {cap}")]
    OracleCapExceeded { got: usize, cap: usize },
    #[error("oracle cap {0} is out of range (1..=12)")]
    InvalidOracleCap(usize),
    #[error("unsupported request: {0}")]
    UnsupportedRequest(String),
}

pub type Result<T> = std::result::Result<T, Error>;
