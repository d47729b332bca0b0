//! Pinhole stereo rig with aligned image planes and an x-axis baseline.

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};

use super::se3::Rigid3;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub f: f64,
    pub cu: f64,
    pub cv: f64,
}

impl CameraIntrinsics {
    pub fn new(f: f64, cu: f64, cv: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite() && cu.is_finite() && cv.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "intrinsics must be finite with f > 0 (f={f}, cu={cu}, cv={cv})"
            )));
        }
        Ok(CameraIntrinsics { f, cu, cv })
    }

    /// Pixel coordinates of a point given in the camera frame.
    pub fn project(&self, p: &Point3<f64>) -> Result<Point2<f64>> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera { depth: p.z });
        }
        Ok(Point2::new(
            self.f * p.x / p.z + self.cu,
            self.f * p.y / p.z + self.cv,
        ))
    }

    /// Maps a pixel to normalized image coordinates (`K⁻¹ x`).
    pub fn normalize(&self, x: &Point2<f64>) -> Point2<f64> {
        Point2::new((x.x - self.cu) / self.f, (x.y - self.cv) / self.f)
    }
}

/// Two identical cameras; the right one sits `baseline` units along +x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    pub intrinsics: CameraIntrinsics,
    pub baseline: f64,
}

impl StereoRig {
    pub fn new(intrinsics: CameraIntrinsics, baseline: f64) -> Result<Self> {
        if !(baseline > 0.0 && baseline.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "baseline must be positive, got {baseline}"
            )));
        }
        Ok(StereoRig {
            intrinsics,
            baseline,
        })
    }

    /// Calibration of the KITTI odometry sequence 00 left/right gray pair.
    pub fn kitti_00() -> Self {
        StereoRig {
            intrinsics: CameraIntrinsics {
                f: 718.856,
                cu: 607.1928,
                cv: 185.2157,
            },
            baseline: 0.537_165_7,
        }
    }

    /// `f·B`, the disparity of a point at unit depth.
    pub fn focal_baseline(&self) -> f64 {
        self.intrinsics.f * self.baseline
    }

    /// Image extent assumed for visibility tests: the principal point is
    /// taken to be the image centre.
    pub fn image_size(&self) -> (f64, f64) {
        (2.0 * self.intrinsics.cu, 2.0 * self.intrinsics.cv)
    }

    pub fn in_image(&self, x: &Point2<f64>) -> bool {
        let (w, h) = self.image_size();
        x.x >= 0.0 && x.x <= w && x.y >= 0.0 && x.y <= h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Projects a point given in the frame-`i` left camera coordinates into one
/// camera of the rig after applying `motion`.
pub fn project(side: Side, rig: &StereoRig, motion: &Rigid3, x: &Point3<f64>) -> Result<Point2<f64>> {
    let mut p = motion.transform_point(x);
    if side == Side::Right {
        p.x -= rig.baseline;
    }
    rig.intrinsics.project(&p)
}

/// One correspondence across the four views of two consecutive stereo frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadMatch {
    pub left_i: Point2<f64>,
    pub right_i: Point2<f64>,
    pub left_next: Point2<f64>,
    pub right_next: Point2<f64>,
}

impl QuadMatch {
    pub fn new(
        left_i: Point2<f64>,
        right_i: Point2<f64>,
        left_next: Point2<f64>,
        right_next: Point2<f64>,
    ) -> Self {
        QuadMatch {
            left_i,
            right_i,
            left_next,
            right_next,
        }
    }

    /// Synthesizes the four observations of a 3D point.
    pub fn from_point(rig: &StereoRig, motion: &Rigid3, x: &Point3<f64>) -> Result<Self> {
        let id = Rigid3::identity();
        Ok(QuadMatch {
            left_i: project(Side::Left, rig, &id, x)?,
            right_i: project(Side::Right, rig, &id, x)?,
            left_next: project(Side::Left, rig, motion, x)?,
            right_next: project(Side::Right, rig, motion, x)?,
        })
    }

    /// `(u, v)` of left-i, right-i, left-(i+1), right-(i+1).
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.left_i.x,
            self.left_i.y,
            self.right_i.x,
            self.right_i.y,
            self.left_next.x,
            self.left_next.y,
            self.right_next.x,
            self.right_next.y,
        ]
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        QuadMatch {
            left_i: Point2::new(a[0], a[1]),
            right_i: Point2::new(a[2], a[3]),
            left_next: Point2::new(a[4], a[5]),
            right_next: Point2::new(a[6], a[7]),
        }
    }

    pub fn points(&self) -> [&Point2<f64>; 4] {
        [&self.left_i, &self.right_i, &self.left_next, &self.right_next]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn next(&self, side: Side) -> &Point2<f64> {
        match side {
            Side::Left => &self.left_next,
            Side::Right => &self.right_next,
        }
    }
}
