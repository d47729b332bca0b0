//! Compression of all algebraic residuals into one 13×13 quadratic form.

use nalgebra::SMatrix;

use super::algebraic::{build_a_with, triangulate, ImageNormalization, Stacked, StackedModel};
use crate::error::{Error, Result};
use crate::geometry::{exp_se3, QuadMatch, Rigid3, Side, StereoRig, Twist};
use crate::rdcr::OutlierMask;

pub type Gamma = SMatrix<f64, 13, 13>;

/// Smallest number of matches that determines a motion.
pub const MIN_INLIERS: usize = 3;

/// The reduced measurement matrix: `Σ AᵀA` over both next-frame views of
/// every kept match.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedMeasurement {
    pub gamma: Gamma,
    /// `F` with `FᵀF = Γ`, negative rounding eigenvalues clamped to zero.
    /// Costs are evaluated as `‖F m̆‖²`, which avoids the cancellation of the
    /// quadratic form near its minimum.
    pub factor: Gamma,
    pub n_points_compressed: usize,
    /// Normalization applied to the next-frame observations.
    pub normalization: ImageNormalization,
}

impl ReducedMeasurement {
    pub fn new(gamma: Gamma, n_points_compressed: usize, normalization: ImageNormalization) -> Self {
        let factor = if gamma.iter().all(|x| x.is_finite()) {
            let eig = gamma.symmetric_eigen();
            let mut f = eig.eigenvectors.transpose();
            for (i, lambda) in eig.eigenvalues.iter().enumerate() {
                let root = lambda.max(0.0).sqrt();
                f.row_mut(i).scale_mut(root);
            }
            f
        } else {
            Gamma::from_element(f64::NAN)
        };
        ReducedMeasurement {
            gamma,
            factor,
            n_points_compressed,
            normalization,
        }
    }

    /// `m̆ᵀ Γ m̆` for a rigid motion.
    pub fn cost(&self, m: &Rigid3) -> f64 {
        self.cost_of(&StackedModel::from_rigid(m).0)
    }

    pub fn cost_of(&self, v: &Stacked) -> f64 {
        (self.factor * v).norm_squared()
    }

    pub fn trace(&self) -> f64 {
        self.gamma.trace()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressOptions {
    /// Center and scale next-frame observations before forming residuals.
    pub normalize: bool,
    /// Divide each match's residual by its triangulated depth, which puts
    /// near and far points on a common image-plane scale.
    pub depth_weighting: bool,
}

impl Default for CompressOptions {
    fn default() -> Self {
        CompressOptions {
            normalize: true,
            depth_weighting: true,
        }
    }
}

impl CompressOptions {
    /// The plain cross-product residuals, with no normalization or weights.
    pub fn unweighted() -> Self {
        CompressOptions {
            normalize: false,
            depth_weighting: false,
        }
    }
}

/// Compresses the unmasked matches with default options.
pub fn compress(matches: &[QuadMatch], mask: &OutlierMask, rig: &StereoRig) -> Result<ReducedMeasurement> {
    compress_with(matches, mask, rig, &CompressOptions::default())
}

pub fn compress_with(
    matches: &[QuadMatch],
    mask: &OutlierMask,
    rig: &StereoRig,
    opts: &CompressOptions,
) -> Result<ReducedMeasurement> {
    if mask.len() != matches.len() {
        return Err(Error::Contract(format!(
            "mask has {} entries for {} matches",
            mask.len(),
            matches.len()
        )));
    }
    let kept = mask.n_inliers();
    if kept < MIN_INLIERS {
        return Err(Error::InsufficientInliers {
            required: MIN_INLIERS,
            actual: kept,
        });
    }

    let mut points = Vec::with_capacity(kept);
    for j in mask.inlier_indices() {
        let m = &matches[j];
        if let Ok(x) = triangulate(&m.left_i, &m.right_i, rig) {
            points.push((j, x));
        }
    }
    if points.is_empty() {
        return Err(Error::DegenerateGeometry(
            "no kept match has positive disparity".into(),
        ));
    }
    if points.len() < MIN_INLIERS {
        return Err(Error::InsufficientInliers {
            required: MIN_INLIERS,
            actual: points.len(),
        });
    }

    let normalization = if opts.normalize {
        ImageNormalization::fit(
            points
                .iter()
                .flat_map(|(j, _)| [&matches[*j].left_next, &matches[*j].right_next]),
        )
    } else {
        ImageNormalization::identity()
    };
    let k = normalization.intrinsics(&rig.intrinsics);

    let mut gamma = Gamma::zeros();
    for (j, x) in &points {
        let weight = if opts.depth_weighting { 1.0 / x.z } else { 1.0 };
        for side in [Side::Left, Side::Right] {
            let obs = normalization.apply(matches[*j].next(side));
            let a = build_a_with(side, x, &obs, &k, rig.baseline) * weight;
            gamma += a.transpose() * a;
        }
    }
    gamma = (gamma + gamma.transpose()) * 0.5;
    Ok(ReducedMeasurement::new(gamma, points.len(), normalization))
}

/// `m̆ᵀ Γ m̆` at `exp(ω)`.
pub fn evaluate_cost(rm: &ReducedMeasurement, w: &Twist) -> f64 {
    rm.cost(&exp_se3(w))
}
