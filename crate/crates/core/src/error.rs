use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    Empty,
    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("probabilities sum to {sum}, not 1 (tolerance 1e-9)")]
    SumNotOne { sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("distribution is not on the simplex: {0}")]
    OffSimplex(String),
    #[error("event index {index} out of range for {n} events")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown divergence `{0}`")]
    UnknownDivergence(String),
    #[error("generator `{0}` is not strictly convex on [0, 1]")]
    NotStrictlyConvex(String),
    #[error("pair root not bracketed: g(0) - lambda = {low}, g(1) - lambda = {high}")]
    NotBracketed { low: f64, high: f64 },
    #[error("no adversary distribution meets the divergence constraint")]
    AdversaryInfeasible,
    #[error("brute-force oracle supports at most 5 events, got {0}")]
    TooLarge(usize),
    #[error("lattice of resolution {0} has no point meeting the divergence constraint")]
    NoFeasiblePoint(u32),
    #[error("linear program is malformed: {0}")]
    MalformedLp(String),
    #[error("simplex numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("linear program unexpectedly {0}")]
    LpStatus(&'static str),
    #[error("solver invariant violated: {0}")]
    InvariantViolation(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("no covered cells to sample from")]
    EmptyCells,
    #[error("degenerate training data: {0}")]
    Degenerate(String),
    #[error("quantile level {0} outside (0, 1)")]
    MuOutOfRange(f64),
    #[error("unsupported file version {found} (expected {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}
