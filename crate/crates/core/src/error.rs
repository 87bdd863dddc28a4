use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Lipschitz audit failed: sampled constant {sampled} exceeds declared {declared}")]
    LipschitzAudit { sampled: f64, declared: f64 },

    #[error("missing {0}")]
    Missing(&'static str),

    #[error("cover gap: net point {0:?} is not covered")]
    CoverGap(Vec<f64>),

    #[error("insufficient levels: {uncovered} net points remain uncaptured after {levels} levels")]
    InsufficientLevels { uncovered: usize, levels: usize },

    #[error(
        "separation violated at level {level}: net point claimed by indices {first} and {second}"
    )]
    SeparationViolated {
        level: usize,
        first: usize,
        second: usize,
    },

    #[error("derivative oscillation unbounded at sample {0}")]
    OscillationUnbounded(usize),

    #[error("ball oscillation certificate failed at sample {0}")]
    BallCertificate(usize),

    #[error("Y not respected by F: max |F - f| on samples is {0}")]
    RestrictionMismatch(f64),

    #[error("convexity audit failed: {0}")]
    Convexity(String),

    #[error("stage {stage} certificate failed: {detail}")]
    StageFailed { stage: usize, detail: String },

    #[error(
        "condition (E) gate failed: worst small-radius oscillation {worst} exceeds {threshold}"
    )]
    GateFailed { worst: f64, threshold: f64 },

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
