//! Rigid motions in 3D and their twist coordinates.
//!
//! Twists are ordered rotation first: `(ω₁, ω₂, ω₃, v₁, v₂, v₃)`. The
//! generator of a twist is the 4×4 matrix `[[ω^, v], [0, 0]]` with `ω^` the
//! skew-symmetric matrix of the rotational part.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Point3, Vector3, Vector6};

use crate::error::{Error, Result};

/// Margin below π at which [`log_se3`] refuses to pick a branch.
pub const LOG_BRANCH_MARGIN: f64 = 1e-6;

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Default truncation order of the series used by [`exp_jacobian`].
pub const DEFAULT_SERIES_ORDER: usize = 10;

/// Element of the Lie algebra se(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist(pub Vector6<f64>);

impl Twist {
    pub fn zero() -> Self {
        Twist(Vector6::zeros())
    }

    pub fn new(rotation: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Twist(Vector6::new(
            rotation.x,
            rotation.y,
            rotation.z,
            translation.x,
            translation.y,
            translation.z,
        ))
    }

    pub fn from_slice(v: &[f64; 6]) -> Self {
        Twist(Vector6::from_column_slice(v))
    }

    pub fn rotation(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.0[3], self.0[4], self.0[5])
    }

    pub fn angle(&self) -> f64 {
        self.rotation().norm()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// The 4×4 generator matrix of this twist.
    pub fn generator(&self) -> Matrix4<f64> {
        let mut z = Matrix4::zeros();
        z.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&self.rotation()));
        z.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation());
        z
    }
}

/// Skew-symmetric matrix such that `hat(a) * b == a.cross(b)`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Basis generator of se(3) for twist coordinate `i` (0-based).
pub fn basis_generator(i: usize) -> Matrix4<f64> {
    let mut v = [0.0; 6];
    v[i] = 1.0;
    Twist::from_slice(&v).generator()
}

/// A rigid motion `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigid3 {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Rigid3 {
    pub fn identity() -> Self {
        Rigid3 {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a motion, checking that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let m = Rigid3 {
            rotation,
            translation,
        };
        if !m.is_valid(ROTATION_TOLERANCE) {
            return Err(Error::Contract(
                "rotation matrix is not orthonormal with unit determinant".into(),
            ));
        }
        Ok(m)
    }

    /// Builds a motion from the upper 3×4 block of a homogeneous matrix.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        Rigid3::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Rigid3 {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Rigid3 {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Checks orthonormality and unit determinant elementwise within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        self.rotation.iter().all(|x| x.is_finite())
            && self.translation.iter().all(|x| x.is_finite())
            && gram.amax() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let s = 0.5 * vee(&(self.rotation - self.rotation.transpose())).norm();
        let c = 0.5 * (self.rotation.trace() - 1.0);
        s.atan2(c)
    }
}

impl Default for Rigid3 {
    fn default() -> Self {
        Rigid3::identity()
    }
}

impl Mul for Rigid3 {
    type Output = Rigid3;

    fn mul(self, rhs: Rigid3) -> Rigid3 {
        Rigid3 {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

impl fmt::Display for Rigid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.rotation;
        let t = &self.translation;
        write!(
            f,
            "[{:.6} {:.6} {:.6} {:.6}; {:.6} {:.6} {:.6} {:.6}; {:.6} {:.6} {:.6} {:.6}]",
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z
        )
    }
}

/// Closed-form exponential of a twist.
pub fn exp_se3(w: &Twist) -> Rigid3 {
    let phi = w.rotation();
    let v = w.translation();
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(&phi);
    let k2 = k * k;

    // a = sin θ / θ, b = (1 - cos θ) / θ², c = (θ - sin θ) / θ³
    let (a, b, c) = if theta < 1e-4 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
            1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0,
        )
    } else {
        let (s, co) = theta.sin_cos();
        (s / theta, (1.0 - co) / theta2, (theta - s) / (theta2 * theta))
    };

    let rotation = Matrix3::identity() + k * a + k2 * b;
    let left_jacobian = Matrix3::identity() + k * b + k2 * c;
    Rigid3 {
        rotation,
        translation: left_jacobian * v,
    }
}

/// Principal-branch logarithm of a rigid motion.
pub fn log_se3(m: &Rigid3) -> Result<Twist> {
    let r = &m.rotation;
    let axis_sin = vee(&(r - r.transpose())) * 0.5;
    let s = axis_sin.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - LOG_BRANCH_MARGIN {
        return Err(Error::BranchAmbiguity {
            angle: theta,
            margin: LOG_BRANCH_MARGIN,
        });
    }

    let theta2 = theta * theta;
    let phi = if theta < 1e-4 {
        axis_sin * (1.0 + theta2 / 6.0 + 7.0 * theta2 * theta2 / 360.0)
    } else {
        axis_sin * (theta / s)
    };

    let k = hat(&phi);
    // coefficient of k² in the inverse left Jacobian
    let d = if theta < 1e-4 {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        let (sn, co) = theta.sin_cos();
        (1.0 - theta * sn / (2.0 * (1.0 - co))) / theta2
    };
    let v_inv = Matrix3::identity() - k * 0.5 + k * k * d;
    Ok(Twist::new(phi, v_inv * m.translation))
}

/// Partial derivatives of the truncated exponential series of the twist
/// generator, one 4×4 matrix per twist coordinate.
///
/// Uses `∂(Zⁿ) = ∂Z·Zⁿ⁻¹ + Z·∂(Zⁿ⁻¹)` summed up to `order` terms.
pub fn exp_jacobian(w: &Twist, order: usize) -> [Matrix4<f64>; 6] {
    let z = w.generator();
    let mut out = [Matrix4::zeros(); 6];
    for (i, slot) in out.iter_mut().enumerate() {
        let dz = basis_generator(i);
        let mut power = Matrix4::identity(); // Z^(n-1)
        let mut d_power = Matrix4::zeros(); // ∂ Z^(n-1)
        let mut factorial = 1.0;
        let mut acc = Matrix4::zeros();
        for n in 1..=order.max(1) {
            factorial *= n as f64;
            let d_next = dz * power + z * d_power;
            acc += d_next / factorial;
            power = z * power;
            d_power = d_next;
        }
        *slot = acc;
    }
    out
}
