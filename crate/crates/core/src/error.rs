use thiserror::Error;

/// Errors raised by systems, metrics, covers, measures and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wrong space: expected {expected}, found {found}")]
    WrongSpace { expected: String, found: String },

    #[error("empty orbit: orbit length must be at least 1")]
    EmptyOrbit,

    #[error("orbit escaped to infinity at iterate {step}")]
    Overflow { step: usize },

    #[error("word exhausted: cannot shift an empty word")]
    WordExhausted,

    #[error("reducible SFT: adjacency graph is not strongly connected")]
    ReducibleSft,

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undecidable refinement: empty witness sample with non-symbolic elements")]
    UndecidableRefinement,

    #[error("not a cover of sample: witness point #{index} {point} is uncovered")]
    NotACover { index: usize, point: String },

    #[error("degenerate compact: {0}")]
    DegenerateCompact(String),

    #[error("partition does not cover support: atom {0} lies in no cell")]
    PartitionGap(String),

    #[error("partition cells overlap: atom {0} lies in more than one cell")]
    PartitionOverlap(String),

    #[error("not a probability measure: total mass {0}")]
    NotProbability(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("partition too coarse for epsilon: cell diameter {diameter} >= {epsilon}")]
    PartitionTooCoarse { diameter: f64, epsilon: f64 },

    #[error("series too short: {0} entries, at least 4 required")]
    SeriesTooShort(usize),

    #[error("cover #{0} in the family is not admissible")]
    NonAdmissible(usize),

    #[error("audit failure: {0}")]
    AuditFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
