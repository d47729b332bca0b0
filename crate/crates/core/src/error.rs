use thiserror::Error;

/// Errors produced by the motion estimation pipeline and its tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation angle {angle} is within {margin} of pi; logarithm branch is ambiguous")]
    BranchAmbiguity { angle: f64, margin: f64 },

    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("non-positive disparity {disparity}")]
    NonPositiveDisparity { disparity: f64 },

    #[error("insufficient data: need at least {required} matches, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("insufficient inliers: need at least {required}, got {actual}")]
    InsufficientInliers { required: usize, actual: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("no consensus: best model had {best} inliers, need at least {required}")]
    ConsensusFailure { best: usize, required: usize },

    #[error("numerical failure at iteration {iteration}: {reason}")]
    NumericalFailure {
        iteration: usize,
        reason: String,
        cost_trace: Vec<f64>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scene generation failed: {0}")]
    Generation(String),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
