use thiserror::Error;

/// Failures of the statistical procedures themselves.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample too small: need at least {min}, got {got}")]
    SampleTooSmall { min: usize, got: usize },
    #[error("sample too large: at most {max} supported, got {got}")]
    SampleTooLarge { max: usize, got: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Failures while loading or aggregating trial data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("record {line}: {reason}")]
    InvalidRecord { line: u64, reason: String },
    #[error("participant {participant}: {reason}")]
    InconsistentParticipant { participant: String, reason: String },
    #[error("no observations for {metric} in cell {cell}")]
    MissingCell { metric: String, cell: String },
}
