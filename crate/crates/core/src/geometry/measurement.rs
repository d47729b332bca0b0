//! The 8×N measurement matrix of a set of quad-matches.
//!
//! Column `j` stacks `(u, v)` of left-i, right-i, left-(i+1), right-(i+1).
//! For uncorrupted data from a rigid motion of an aligned stereo rig the
//! matrix has rank at most 6 once normalized.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::camera::{QuadMatch, StereoRig};
use crate::error::{Error, Result};

/// Minimum number of columns for the rank-6 structure to be informative.
pub const MIN_MATCHES: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Subtract each row's mean (pixel units).
    MeanRemoval,
    /// Apply `K⁻¹` to every observation (normalized image coordinates).
    KInverse,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::KInverse
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementMatrix {
    data: DMatrix<f64>,
    normalization: Normalization,
}

impl MeasurementMatrix {
    /// Stacks `matches` column-wise and applies `mode`.
    pub fn build(matches: &[QuadMatch], mode: Normalization, rig: &StereoRig) -> Result<Self> {
        if matches.len() < MIN_MATCHES {
            return Err(Error::InsufficientData {
                required: MIN_MATCHES,
                actual: matches.len(),
            });
        }
        let n = matches.len();
        let mut data = DMatrix::zeros(8, n);
        for (j, m) in matches.iter().enumerate() {
            data.column_mut(j).copy_from_slice(&m.to_array());
        }
        match mode {
            Normalization::KInverse => {
                let k = rig.intrinsics;
                for j in 0..n {
                    for p in 0..4 {
                        data[(2 * p, j)] = (data[(2 * p, j)] - k.cu) / k.f;
                        data[(2 * p + 1, j)] = (data[(2 * p + 1, j)] - k.cv) / k.f;
                    }
                }
            }
            Normalization::MeanRemoval => {
                for mut row in data.row_iter_mut() {
                    let mean = row.mean();
                    row.add_scalar_mut(-mean);
                }
            }
        }
        Ok(MeasurementMatrix {
            data,
            normalization: mode,
        })
    }

    /// Wraps an existing 8×N matrix.
    pub fn from_matrix(data: DMatrix<f64>, normalization: Normalization) -> Result<Self> {
        if data.nrows() != 8 {
            return Err(Error::Contract(format!(
                "measurement matrix must have 8 rows, got {}",
                data.nrows()
            )));
        }
        if data.ncols() < MIN_MATCHES {
            return Err(Error::InsufficientData {
                required: MIN_MATCHES,
                actual: data.ncols(),
            });
        }
        Ok(MeasurementMatrix {
            data,
            normalization,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `σ₇ / σ₁`, the rank-6 violation ratio. Zero when fewer than 7 singular
/// values exist or the matrix vanishes.
pub fn rank6_ratio(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    if s.len() < 7 || s[0] == 0.0 {
        return 0.0;
    }
    s[6] / s[0]
}
