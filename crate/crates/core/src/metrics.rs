//! Motion error metrics and outlier-detection statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{log_se3, Rigid3};
use crate::rdcr::OutlierMask;

/// Regularizer of the relative error denominator.
pub const RELATIVE_EPSILON: f64 = 1e-5;

/// `‖log(M · M*⁻¹)‖`.
pub fn se3_error(m: &Rigid3, m_star: &Rigid3) -> Result<f64> {
    if m == m_star {
        return Ok(0.0);
    }
    Ok(log_se3(&(*m * m_star.inverse()))?.norm())
}

/// `se3_error(M, M*) / (‖log M*‖ + ε)`.
pub fn relative_error(m: &Rigid3, m_star: &Rigid3) -> Result<f64> {
    let num = se3_error(m, m_star)?;
    let den = log_se3(m_star)?.norm() + RELATIVE_EPSILON;
    Ok(num / den)
}

/// Arithmetic mean; `None` for an empty input.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Confusion counts of an outlier mask against ground truth, where a flagged
/// outlier is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    /// Fraction of matches removed.
    pub removal_fraction: f64,
    /// Fraction of matches wrongly removed.
    pub excess_elimination: f64,
    pub accuracy: f64,
    /// Fraction of true outliers that were flagged; 1 when there are none.
    pub recall: f64,
}

impl DetectionStats {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }
}

pub fn detection_stats(mask: &OutlierMask, truth: &[bool]) -> Result<DetectionStats> {
    detection_stats_from_flags(mask.flags(), truth)
}

pub fn detection_stats_from_flags(flags: &[bool], truth: &[bool]) -> Result<DetectionStats> {
    if flags.len() != truth.len() {
        return Err(Error::Contract(format!(
            "mask has {} entries but truth has {}",
            flags.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&f, &t) in flags.iter().zip(truth) {
        match (f, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let n = flags.len().max(1) as f64;
    Ok(DetectionStats {
        true_positive: tp,
        false_positive: fp,
        false_negative: fn_,
        true_negative: tn,
        removal_fraction: (tp + fp) as f64 / n,
        excess_elimination: fp as f64 / n,
        accuracy: (tp + tn) as f64 / n,
        recall: if tp + fn_ == 0 {
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        },
    })
}
