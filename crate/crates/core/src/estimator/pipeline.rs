//! End-to-end estimation: outlier detection, compression, optimization.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::lm::{lm_optimize, LmConfig, LmDiagnostics};
use super::reprojection::reprojection_errors;
use super::rmm::{compress_with, CompressOptions, MIN_INLIERS};
use crate::baselines::{ransac_estimate, RansacConfig};
use crate::error::{Error, Result};
use crate::geometry::{exp_se3, MeasurementMatrix, Normalization, QuadMatch, Rigid3, StereoRig, Twist};
use crate::rdcr::{classify_outliers, rdcr_stage, OutlierMask, RdcrParams};

/// Available estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Rank-constrained decomposition, then compressed least squares.
    Rdcr,
    /// Convex initialization alone as the detector.
    Apg,
    Ransac,
    /// Compressed least squares on all matches.
    Cls,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rdcr, Method::Apg, Method::Ransac, Method::Cls];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rdcr => "rdcr",
            Method::Apg => "apg",
            Method::Ransac => "ransac",
            Method::Cls => "cls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}' (expected rdcr, apg, ransac or cls)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub rdcr: RdcrParams,
    pub normalization: Normalization,
    pub compress: CompressOptions,
    pub lm: LmConfig,
    pub ransac: RansacConfig,
    /// Reprojection gate in pixels for an optional second fit on the
    /// matches consistent with the first estimate.
    pub refine_threshold: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rdcr: RdcrParams::default(),
            normalization: Normalization::KInverse,
            compress: CompressOptions::default(),
            lm: LmConfig::default(),
            ransac: RansacConfig::default(),
            refine_threshold: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub detection: Duration,
    pub compression: Duration,
    pub optimization: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.detection + self.compression + self.optimization
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub apg_iterations: usize,
    pub rdcr_iterations: usize,
    pub lm: Option<LmDiagnostics>,
    pub timings: Timings,
    pub n_inliers: usize,
    /// Whether the optional refit on reprojection-consistent matches ran.
    pub refined: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionEstimate {
    pub motion: Rigid3,
    pub mask: OutlierMask,
    pub diagnostics: Diagnostics,
}

/// Compresses the unmasked matches and minimizes the compressed cost from
/// the identity.
pub fn fit_masked(
    matches: &[QuadMatch],
    mask: &OutlierMask,
    rig: &StereoRig,
    cfg: &PipelineConfig,
    start: &Twist,
) -> Result<(Twist, LmDiagnostics, Duration, Duration)> {
    let t0 = Instant::now();
    let rm = compress_with(matches, mask, rig, &cfg.compress)?;
    let t1 = Instant::now();
    let (w, diag) = lm_optimize(&rm, start, &cfg.lm)?;
    Ok((w, diag, t1 - t0, t1.elapsed()))
}

/// The two-stage pipeline with the rank-constrained detector.
pub fn estimate_motion(matches: &[QuadMatch], rig: &StereoRig, cfg: &PipelineConfig) -> Result<MotionEstimate> {
    estimate_with(Method::Rdcr, matches, rig, cfg)
}

/// Runs any of the available estimators.
pub fn estimate_with(method: Method, matches: &[QuadMatch], rig: &StereoRig, cfg: &PipelineConfig) -> Result<MotionEstimate> {
    let mut diagnostics = Diagnostics {
        apg_iterations: 0,
        rdcr_iterations: 0,
        lm: None,
        timings: Timings::default(),
        n_inliers: 0,
        refined: false,
    };

    if method == Method::Ransac {
        let t0 = Instant::now();
        let res = ransac_estimate(matches, rig, &cfg.ransac)?;
        diagnostics.timings.detection = t0.elapsed();
        diagnostics.n_inliers = res.mask.n_inliers();
        diagnostics.lm = res.refit;
        return Ok(MotionEstimate {
            motion: res.motion,
            mask: res.mask,
            diagnostics,
        });
    }

    let t0 = Instant::now();
    let mask = match method {
        Method::Cls => OutlierMask::none(matches.len()),
        Method::Rdcr | Method::Apg => {
            let w = MeasurementMatrix::build(matches, cfg.normalization, rig)?;
            let out = rdcr_stage(&w, &cfg.rdcr)?;
            diagnostics.apg_iterations = out.init.iterations_run;
            if method == Method::Rdcr {
                diagnostics.rdcr_iterations = out.refined.iterations_run;
                out.mask
            } else {
                classify_outliers(&out.init.s, cfg.rdcr.tau0)
            }
        }
        Method::Ransac => unreachable!(),
    };
    diagnostics.timings.detection = t0.elapsed();
    if mask.n_inliers() < MIN_INLIERS {
        return Err(Error::InsufficientInliers {
            required: MIN_INLIERS,
            actual: mask.n_inliers(),
        });
    }

    let (mut w, mut lm, tc, to) = fit_masked(matches, &mask, rig, cfg, &Twist::zero())?;
    diagnostics.timings.compression = tc;
    diagnostics.timings.optimization = to;
    let mut mask = mask;

    if let Some(gate) = cfg.refine_threshold {
        let motion = exp_se3(&w);
        let flags: Vec<bool> = matches
            .iter()
            .map(|q| match reprojection_errors(q, rig, &motion) {
                Ok([a, b]) => !(a <= gate && b <= gate),
                Err(_) => true,
            })
            .collect();
        let second = OutlierMask::new(flags, gate);
        if second.n_inliers() >= MIN_INLIERS {
            let (w2, lm2, tc2, to2) = fit_masked(matches, &second, rig, cfg, &w)?;
            w = w2;
            lm = lm2;
            mask = second;
            diagnostics.timings.compression += tc2;
            diagnostics.timings.optimization += to2;
            diagnostics.refined = true;
        }
    }

    diagnostics.n_inliers = mask.n_inliers();
    diagnostics.lm = Some(lm);
    Ok(MotionEstimate {
        motion: exp_se3(&w),
        mask,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::relative_error;
    use crate::synthgen::{generate_scene, CorruptionConfig};

    #[test]
    fn clean_scene_is_recovered() {
        let rig = StereoRig::kitti_00();
        let scene = generate_scene(&rig, &CorruptionConfig::new(300, 0.0, 0.0, 1)).unwrap();
        let est = estimate_motion(&scene.matches_corrupt, &rig, &PipelineConfig::default()).unwrap();
        assert!(relative_error(&est.motion, &scene.motion_true).unwrap() < 1e-6);
        assert_eq!(est.diagnostics.apg_iterations, 20);
        assert_eq!(est.diagnostics.rdcr_iterations, 20);
    }

    #[test]
    fn every_method_runs() {
        let rig = StereoRig::kitti_00();
        let scene = generate_scene(&rig, &CorruptionConfig::new(200, 0.3, 1.0, 2)).unwrap();
        for m in Method::ALL {
            let est = estimate_with(m, &scene.matches_corrupt, &rig, &PipelineConfig::default()).unwrap();
            assert_eq!(est.mask.len(), 200);
            assert!(est.motion.is_valid(1e-9));
        }
    }

    #[test]
    fn minimal_inlier_set_still_fits() {
        let rig = StereoRig::kitti_00();
        let scene = generate_scene(&rig, &CorruptionConfig::new(20, 0.0, 0.0, 3)).unwrap();
        let flags: Vec<bool> = (0..20).map(|i| i >= 3).collect();
        let mask = OutlierMask::new(flags, 0.0);
        let (w, _, _, _) = fit_masked(&scene.matches_corrupt, &mask, &rig, &PipelineConfig::default(), &Twist::zero()).unwrap();
        assert!(relative_error(&exp_se3(&w), &scene.motion_true).unwrap() < 1e-6);
    }

    #[test]
    fn refinement_flag_runs_second_fit() {
        let rig = StereoRig::kitti_00();
        let scene = generate_scene(&rig, &CorruptionConfig::new(300, 0.3, 1.0, 4)).unwrap();
        let cfg = PipelineConfig {
            refine_threshold: Some(4.0),
            ..PipelineConfig::default()
        };
        let est = estimate_motion(&scene.matches_corrupt, &rig, &cfg).unwrap();
        assert!(est.diagnostics.refined);
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lmeds".parse::<Method>().is_err());
    }
}
