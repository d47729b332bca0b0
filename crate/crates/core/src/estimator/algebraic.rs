//! Triangulation and the linear form of the algebraic reprojection residual.
//!
//! For a point `X` seen at frame `i` and observed at `x = (u, v)` in one
//! camera of frame `i+1`, the residual is `(K(RX + t) − b) × (u, v, 1)` with
//! `b = 0` for the left camera and `b = (f·B, 0, 0)` for the right one. It is
//! linear in the stacked model `m̆ = [R row-major, t, 1]`, so it can be
//! written `A · m̆` with a 3×13 coefficient matrix `A`.

use nalgebra::{Point2, Point3, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Rigid3, Side, StereoRig};

pub type Stacked = SVector<f64, 13>;
pub type CoefficientMatrix = SMatrix<f64, 3, 13>;

/// Aligned-rig triangulation of a frame-`i` stereo pair, in left-camera
/// coordinates.
pub fn triangulate(left: &Point2<f64>, right: &Point2<f64>, rig: &StereoRig) -> Result<Point3<f64>> {
    let disparity = left.x - right.x;
    if !(disparity > 0.0) {
        return Err(Error::NonPositiveDisparity { disparity });
    }
    let k = rig.intrinsics;
    let z = rig.focal_baseline() / disparity;
    Ok(Point3::new((left.x - k.cu) * z / k.f, (left.y - k.cv) * z / k.f, z))
}

/// The stacked 13-vector of a rigid motion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StackedModel(pub Stacked);

impl StackedModel {
    pub fn from_rigid(m: &Rigid3) -> Self {
        let r = m.rotation();
        let t = m.translation();
        let mut v = Stacked::zeros();
        for row in 0..3 {
            for col in 0..3 {
                v[3 * row + col] = r[(row, col)];
            }
        }
        v[9] = t.x;
        v[10] = t.y;
        v[11] = t.z;
        v[12] = 1.0;
        StackedModel(v)
    }

    pub fn vector(&self) -> &Stacked {
        &self.0
    }
}

/// Isotropic similarity applied to image observations before the algebraic
/// residual is formed: `x' = scale · (x − mean)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageNormalization {
    pub mean: Vector2<f64>,
    pub scale: f64,
}

impl ImageNormalization {
    pub fn identity() -> Self {
        ImageNormalization {
            mean: Vector2::zeros(),
            scale: 1.0,
        }
    }

    /// Centroid at the origin and mean distance `√2` from it.
    pub fn fit<'a, I>(points: I) -> Self
    where
        I: IntoIterator<Item = &'a Point2<f64>>,
        I::IntoIter: Clone,
    {
        let iter = points.into_iter();
        let mut n = 0usize;
        let mut sum = Vector2::zeros();
        for p in iter.clone() {
            sum += p.coords;
            n += 1;
        }
        if n == 0 {
            return ImageNormalization::identity();
        }
        let mean = sum / n as f64;
        let spread = iter.map(|p| (p.coords - mean).norm()).sum::<f64>() / n as f64;
        let scale = if spread > 0.0 {
            std::f64::consts::SQRT_2 / spread
        } else {
            1.0
        };
        ImageNormalization { mean, scale }
    }

    pub fn apply(&self, p: &Point2<f64>) -> Point2<f64> {
        Point2::from((p.coords - self.mean) * self.scale)
    }

    /// Intrinsics whose projections land directly in normalized coordinates.
    pub fn intrinsics(&self, k: &CameraIntrinsics) -> CameraIntrinsics {
        CameraIntrinsics {
            f: self.scale * k.f,
            cu: self.scale * (k.cu - self.mean.x),
            cv: self.scale * (k.cv - self.mean.y),
        }
    }
}

/// Coefficient matrix of the residual in pixel coordinates.
pub fn build_a(side: Side, x: &Point3<f64>, x_next: &Point2<f64>, rig: &StereoRig) -> CoefficientMatrix {
    build_a_with(side, x, x_next, &rig.intrinsics, rig.baseline)
}

/// Coefficient matrix for arbitrary (possibly normalized) intrinsics.
pub(crate) fn build_a_with(
    side: Side,
    x: &Point3<f64>,
    x_next: &Point2<f64>,
    k: &CameraIntrinsics,
    baseline: f64,
) -> CoefficientMatrix {
    // Rows of the 3×13 maps m̆ ↦ c₁, c₂, c₃ where c = K(RX + t) − b.
    let mut c = SMatrix::<f64, 3, 13>::zeros();
    let xs = [x.x, x.y, x.z];
    for j in 0..3 {
        c[(0, j)] = k.f * xs[j];
        c[(0, 6 + j)] = k.cu * xs[j];
        c[(1, 3 + j)] = k.f * xs[j];
        c[(1, 6 + j)] = k.cv * xs[j];
        c[(2, 6 + j)] = xs[j];
    }
    c[(0, 9)] = k.f;
    c[(0, 11)] = k.cu;
    c[(1, 10)] = k.f;
    c[(1, 11)] = k.cv;
    c[(2, 11)] = 1.0;
    if side == Side::Right {
        c[(0, 12)] = -k.f * baseline;
    }

    let (u, v) = (x_next.x, x_next.y);
    let (c1, c2, c3) = (c.row(0), c.row(1), c.row(2));
    let mut a = CoefficientMatrix::zeros();
    a.set_row(0, &(c2 - c3 * v));
    a.set_row(1, &(c3 * u - c1));
    a.set_row(2, &(c1 * v - c2 * u));
    a
}
