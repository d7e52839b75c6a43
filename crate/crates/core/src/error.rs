use thiserror::Error;

/// Everything that can go wrong across the engine.
///
/// Verification failures are *not* errors: [`crate::verify_decomposition`]
/// always returns a certificate whose verdict carries the reason.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("both parts of the host must be non-empty")]
    ZeroPart,
    #[error("{0} and {1} are not adjacent in the host")]
    NotAnEdge(String, String),
    #[error("{0} and {1} are not twins")]
    NotTwin(String, String),
    #[error("origin {0} is not in the switchable set")]
    InvalidOrigin(String),
    #[error("degree of the first vertex is not larger than the second")]
    DegreeNotGreater,
    #[error("leave size bound violated: {0}")]
    BoundViolated(String),
    #[error("no witness found: {0}")]
    NoWitness(String),
    #[error("graph is not even")]
    NotEven,
    #[error("invalid packing: {0}")]
    InvalidPacking(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("internal invariant breach: {0}")]
    InternalInvariantBreach(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            Error::OutOfScope(_) => 3,
            Error::SearchExhausted(_) => 4,
            Error::InternalInvariantBreach(_) => 5,
            _ => 1,
        }
    }
}
