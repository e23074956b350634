use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("probability mass sums to {sum} (deviation {deviation:.3e} exceeds 1e-9)")]
    NotNormalized { sum: f64, deviation: f64 },
    #[error("negative or non-finite mass {value} at flat cell {cell}")]
    BadMass { value: f64, cell: usize },
    #[error("table would hold {cells} cells, above the cap of {cap}")]
    TableTooLarge { cells: u128, cap: u64 },
    #[error("mass length {got} does not match axis product {expected}")]
    MassLength { got: usize, expected: usize },
    #[error("alphabet labels must be distinct and match the declared size {size}")]
    BadLabels { size: usize },
    #[error("axis subset is empty")]
    EmptyAxes,
    #[error("axis {axis} out of range for a {dims}-axis table")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("axis subsets overlap")]
    OverlappingAxes,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sequence length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: u32, size: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exact enumeration needs {needed} states, budget is {budget}")]
    EnumerationBudget { needed: u128, budget: u64 },
    #[error("codebook needs log2(size) = {required_log2:.2}, budget allows {budget_log2:.2}")]
    BudgetExceeded { required_log2: f64, budget_log2: f64 },
    #[error("sizing window is empty at block length {n_prime}; smallest feasible length is {minimal}")]
    InfeasibleSizing { n_prime: usize, minimal: usize },
    #[error("joint law does not factorize through the chain: max cell deviation {deviation:.3e}")]
    NotFactorizing { deviation: f64 },
    #[error("conditioning sequence is not typical (scaled deviation {deviation:.4})")]
    ConditionNotTypical { deviation: f64 },
    #[error("region is empty")]
    EmptyRegion,
}

pub type Result<T> = std::result::Result<T, Error>;
