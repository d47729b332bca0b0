//! Column classifier on the sparse component.

use nalgebra::DMatrix;

use super::linalg::l1_norm;

/// Per-match outlier flags.
#[derive(Clone, Debug, PartialEq)]
pub struct OutlierMask {
    flags: Vec<bool>,
    threshold_used: f64,
}

impl OutlierMask {
    pub fn new(flags: Vec<bool>, threshold_used: f64) -> Self {
        OutlierMask {
            flags,
            threshold_used,
        }
    }

    /// A mask that keeps every match.
    pub fn none(n: usize) -> Self {
        OutlierMask::new(vec![false; n], f64::INFINITY)
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn threshold_used(&self) -> f64 {
        self.threshold_used
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_outlier(&self, j: usize) -> bool {
        self.flags[j]
    }

    pub fn n_outliers(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn n_inliers(&self) -> usize {
        self.len() - self.n_outliers()
    }

    pub fn inlier_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &f)| !f).map(|(j, _)| j)
    }
}

/// Flags column `j` iff `‖S_j‖₁ > min(τ₀, ‖S‖₁ / N)`.
pub fn classify_outliers(s: &DMatrix<f64>, tau0: f64) -> OutlierMask {
    let n = s.ncols();
    if n == 0 {
        return OutlierMask::new(Vec::new(), tau0);
    }
    let threshold = tau0.min(l1_norm(s) / n as f64);
    let flags = s
        .column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>() > threshold)
        .collect();
    OutlierMask::new(flags, threshold)
}
