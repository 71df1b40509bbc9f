use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("size {value} is outside (0, {capacity}]")]
    InvalidSize { value: u64, capacity: u64 },
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error("capacity mismatch: {left} vs {right}")]
    CapacityMismatch { left: u64, right: u64 },
    #[error("item of size {size} does not fit bin {bin} (load {load}, capacity {capacity})")]
    CapacityExceeded {
        bin: usize,
        load: u64,
        size: u64,
        capacity: u64,
    },
    #[error("bin {index} does not exist ({bins} open)")]
    BadIndex { index: usize, bins: usize },
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("size {0} is not in the support")]
    UnknownSize(u64),
    #[error("empty history")]
    EmptyHistory,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("column generation did not converge within {0} rounds")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("too many configurations (estimated {0})")]
    TooManyConfigurations(u128),
    #[error("instance of {n} arbitrary-size items exceeds the exact-solver limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("fractional plan does not cover the instance")]
    Uncovered,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("expected {expected} arrivals, got {got}")]
    HorizonMismatch { expected: usize, got: usize },
    #[error("oracle plan does not cover the history: {0}")]
    PlanMismatch(String),
    #[error("policy requires integer sizes over a small capacity (got capacity {0})")]
    NotIntegerRegime(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
