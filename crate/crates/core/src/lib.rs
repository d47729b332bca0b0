//! Robust stereo motion estimation: outlier detection by constrained-rank
//! robust decomposition, followed by a compressed least-squares fit on SE(3).

pub mod baselines;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod metrics;
pub mod rdcr;
pub mod synthgen;

pub use error::{Error, Result};
