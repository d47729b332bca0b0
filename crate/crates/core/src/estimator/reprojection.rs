//! Geometric reprojection of triangulated matches into the next frame.

use nalgebra::Point3;

use super::algebraic::triangulate;
use crate::error::Result;
use crate::geometry::{project, QuadMatch, Rigid3, Side, StereoRig};

/// Pixel distances between the predicted and observed next-frame points,
/// left then right.
pub fn reprojection_errors(q: &QuadMatch, rig: &StereoRig, motion: &Rigid3) -> Result<[f64; 2]> {
    let x = triangulate(&q.left_i, &q.right_i, rig)?;
    reprojection_errors_of(&x, q, rig, motion)
}

/// As [`reprojection_errors`] for an already triangulated point.
pub fn reprojection_errors_of(x: &Point3<f64>, q: &QuadMatch, rig: &StereoRig, motion: &Rigid3) -> Result<[f64; 2]> {
    let l = project(Side::Left, rig, motion, x)?;
    let r = project(Side::Right, rig, motion, x)?;
    Ok([(l - q.left_next).norm(), (r - q.right_next).norm()])
}

/// Sum of squared reprojection errors over the selected matches; matches
/// that cannot be reprojected contribute `+∞`.
pub fn reprojection_cost<I>(matches: &[QuadMatch], indices: I, rig: &StereoRig, motion: &Rigid3) -> f64
where
    I: IntoIterator<Item = usize>,
{
    indices
        .into_iter()
        .map(|j| match reprojection_errors(&matches[j], rig, motion) {
            Ok([a, b]) => a * a + b * b,
            Err(_) => f64::INFINITY,
        })
        .sum()
}
