//! Stage two: lossless compression of the algebraic reprojection cost into a
//! 13×13 quadratic form and its minimization on SE(3).

pub mod algebraic;
pub mod lm;
pub mod pipeline;
pub mod reprojection;
pub mod rmm;

pub use algebraic::{build_a, triangulate, ImageNormalization, StackedModel};
pub use lm::{cost_gradient, lm_optimize, LmConfig, LmDiagnostics, Termination};
pub use pipeline::{estimate_motion, estimate_with, fit_masked, Diagnostics, Method, MotionEstimate, PipelineConfig, Timings};
pub use reprojection::{reprojection_cost, reprojection_errors};
pub use rmm::{compress, compress_with, evaluate_cost, CompressOptions, Gamma, ReducedMeasurement, MIN_INLIERS};
