use thiserror::Error;

/// Errors raised by the engine. Display strings are part of the CLI
/// contract and are surfaced verbatim in JSON error reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("not a Laurent polynomial: {0}")]
    NotLaurent(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("non-nilpotent argument")]
    NonNilpotent,
    #[error("unit coefficient is not one")]
    UnitNotOne,
    #[error("non-causal defect at grade {0}")]
    NonCausalDefect(String),
    #[error("order hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("empty ray locus")]
    EmptyRayLocus,
    #[error("no stable objects")]
    NoStableObjects,
    #[error("probe on singular point")]
    ProbeOnSingularPoint,
    #[error("not stabilized: {0}")]
    NotStabilized(String),
    #[error("under-converged diagram: {0}")]
    UnderConverged(String),
    #[error("no wall: classes are collinear")]
    NoWall,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("loop check failed at {0}")]
    LoopCheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
