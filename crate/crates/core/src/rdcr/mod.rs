//! Stage one: robust low-rank plus sparse decomposition of the measurement
//! matrix and the column classifier that turns the sparse part into an
//! outlier mask.

mod apg;
mod classify;
mod decompose;
pub mod linalg;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use apg::apg_init;
pub use classify::{classify_outliers, OutlierMask};
pub use decompose::{rdcr_decompose, rdcr_from_init, rdcr_stage};
pub use linalg::{singular_value_threshold, skinny_svd_project, soft_threshold};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdcrParams {
    /// ℓ1 weight of the sparse term.
    pub lambda: f64,
    /// Lower bound on the thresholding parameter.
    pub mu_floor: f64,
    /// Constrained-rank iterations after initialization.
    pub k_max: usize,
    /// Iterations of the accelerated proximal gradient initialization.
    pub apg_iters: usize,
    /// Continuation fraction.
    pub delta: f64,
    pub alpha_l: f64,
    pub alpha_s: f64,
    pub rank: usize,
    /// Saturation of the classifier threshold.
    pub tau0: f64,
    /// ℓ1 weight used by the initialization; `None` selects `1/√min(m, n)`.
    pub apg_lambda: Option<f64>,
    /// Geometric decay of the initialization threshold.
    pub apg_eta: f64,
}

impl Default for RdcrParams {
    fn default() -> Self {
        RdcrParams {
            lambda: 1e-2,
            mu_floor: 1e-9,
            k_max: 20,
            apg_iters: 20,
            delta: 1e-3,
            alpha_l: 1.0,
            alpha_s: 0.2,
            rank: 6,
            tau0: 0.5,
            apg_lambda: None,
            apg_eta: 0.9,
        }
    }
}

impl RdcrParams {
    /// Checks parameter ranges for a matrix with `n` columns.
    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("mu_floor", self.mu_floor),
            ("delta", self.delta),
            ("tau0", self.tau0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.1..=1.0).contains(&self.alpha_l) {
            return Err(Error::InvalidConfig(format!(
                "alpha_l must lie in [0.1, 1], got {}",
                self.alpha_l
            )));
        }
        if !(0.1..=0.5).contains(&self.alpha_s) {
            return Err(Error::InvalidConfig(format!(
                "alpha_s must lie in [0.1, 0.5], got {}",
                self.alpha_s
            )));
        }
        if let Some(l) = self.apg_lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("apg_lambda must be positive, got {l}")));
            }
        }
        if !(self.apg_eta > 0.0 && self.apg_eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "apg_eta must lie in (0, 1), got {}",
                self.apg_eta
            )));
        }
        if self.rank == 0 || self.rank > n.min(8) {
            return Err(Error::InvalidConfig(format!(
                "rank must lie in [1, {}], got {}",
                n.min(8),
                self.rank
            )));
        }
        Ok(())
    }

    /// The initialization ℓ1 weight for an `m × n` matrix.
    pub fn apg_lambda_for(&self, m: usize, n: usize) -> f64 {
        self.apg_lambda
            .unwrap_or_else(|| 1.0 / (m.min(n).max(1) as f64).sqrt())
    }
}

/// Low-rank plus sparse split `W ≈ L + S`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub l: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub iterations_run: usize,
    pub final_mu: f64,
    /// `‖W − L − S‖_F`.
    pub residual: f64,
    /// Residual after each iteration.
    pub residual_trace: Vec<f64>,
}

impl Decomposition {
    fn new(w: &DMatrix<f64>, l: DMatrix<f64>, s: DMatrix<f64>, iterations_run: usize, final_mu: f64, residual_trace: Vec<f64>) -> Self {
        let residual = (w - &l - &s).norm();
        Decomposition {
            l,
            s,
            iterations_run,
            final_mu,
            residual,
            residual_trace,
        }
    }
}

/// Result of the full stage: initialization, refinement and the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct RdcrOutput {
    pub init: Decomposition,
    pub refined: Decomposition,
    pub mask: OutlierMask,
}
