//! Rigid-motion algebra, the stereo camera model and the measurement matrix.

pub mod camera;
pub mod measurement;
pub mod se3;

pub use camera::{project, CameraIntrinsics, QuadMatch, Side, StereoRig};
pub use measurement::{rank6_ratio, singular_values, MeasurementMatrix, Normalization, MIN_MATCHES};
pub use se3::{basis_generator, exp_jacobian, exp_se3, hat, log_se3, Rigid3, Twist};
