//! Synthetic moving-stereo-rig scenes with controlled corruption.
//!
//! A scene is one frame pair: a random rigid motion, points sampled inside
//! the frustum of all four views, their exact projections, and a corrupted
//! copy carrying Gaussian noise on every coordinate plus impulsive offsets
//! on a labelled subset of matches.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{Point2, Point3, Vector2, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{exp_se3, CameraIntrinsics, QuadMatch, Rigid3, StereoRig, Twist, MIN_MATCHES};

/// Largest rotation angle of a generated inter-frame motion (radians).
pub const MAX_ROTATION: f64 = 0.2;
/// Generated translation norms lie in `[0.5, 2] × baseline`.
pub const TRANSLATION_RANGE: (f64, f64) = (0.5, 2.0);
/// Point depths lie in `[4, 60] × baseline`.
pub const DEPTH_RANGE: (f64, f64) = (4.0, 60.0);

const SAMPLE_ATTEMPTS_PER_POINT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub n_matches: usize,
    pub outlier_fraction: f64,
    pub sigma_n: f64,
    pub sigma_j_range: (f64, f64),
    pub seed: u64,
}

impl CorruptionConfig {
    pub fn new(n_matches: usize, outlier_fraction: f64, sigma_n: f64, seed: u64) -> Self {
        CorruptionConfig {
            n_matches,
            outlier_fraction,
            sigma_n,
            sigma_j_range: (2.0, 100.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_matches < MIN_MATCHES {
            return Err(Error::InvalidConfig(format!(
                "n_matches must be at least {MIN_MATCHES}, got {}",
                self.n_matches
            )));
        }
        self.validate_noise()
    }

    fn validate_noise(&self) -> Result<()> {
        let (lo, hi) = self.sigma_j_range;
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidConfig(format!(
                "outlier_fraction must lie in [0, 1], got {}",
                self.outlier_fraction
            )));
        }
        if !(self.sigma_n >= 0.0 && self.sigma_n.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_n must be non-negative, got {}",
                self.sigma_n
            )));
        }
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_j_range must be a non-empty interval with lower bound >= 0, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// `round(P_o · N)` with ties to even.
    pub fn outlier_count(&self) -> usize {
        (self.outlier_fraction * self.n_matches as f64).round_ties_even() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub rig: StereoRig,
    pub config: CorruptionConfig,
    pub motion_true: Rigid3,
    /// Points in frame-`i` left camera coordinates.
    pub points_3d: Vec<Point3<f64>>,
    pub matches_clean: Vec<QuadMatch>,
    pub matches_corrupt: Vec<QuadMatch>,
    pub outlier_truth: Vec<bool>,
}

fn unit_vector3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Draws a bounded random inter-frame motion.
pub fn random_motion(rng: &mut ChaCha8Rng, baseline: f64) -> Rigid3 {
    let axis = unit_vector3(rng);
    let angle = rng.random_range(0.0..=MAX_ROTATION);
    let dir = unit_vector3(rng);
    let t_norm = baseline * rng.random_range(TRANSLATION_RANGE.0..=TRANSLATION_RANGE.1);
    let rot_only = exp_se3(&Twist::new(axis * angle, Vector3::zeros()));
    Rigid3::from_parts_unchecked(*rot_only.rotation(), dir * t_norm)
}

/// Generates a scene: motion, visible points, clean and corrupted matches.
pub fn generate_scene(rig: &StereoRig, cfg: &CorruptionConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let motion = random_motion(&mut rng, rig.baseline);
    let k = rig.intrinsics;
    let (width, height) = rig.image_size();

    let mut points = Vec::with_capacity(cfg.n_matches);
    let mut clean = Vec::with_capacity(cfg.n_matches);
    let budget = SAMPLE_ATTEMPTS_PER_POINT * cfg.n_matches;
    let mut attempts = 0;
    while clean.len() < cfg.n_matches {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Generation(format!(
                "only {} of {} points visible in all four views after {budget} attempts",
                clean.len(),
                cfg.n_matches
            )));
        }
        let z = rig.baseline * rng.random_range(DEPTH_RANGE.0..=DEPTH_RANGE.1);
        let u = rng.random_range(0.0..=width);
        let v = rng.random_range(0.0..=height);
        let x = Point3::new((u - k.cu) * z / k.f, (v - k.cv) * z / k.f, z);
        let Ok(q) = QuadMatch::from_point(rig, &motion, &x) else {
            continue;
        };
        if q.points().iter().all(|p| rig.in_image(p)) {
            points.push(x);
            clean.push(q);
        }
    }

    let (corrupt, truth) = corrupt_matches(&clean, cfg)?;
    Ok(SyntheticScene {
        rig: *rig,
        config: cfg.clone(),
        motion_true: motion,
        points_3d: points,
        matches_clean: clean,
        matches_corrupt: corrupt,
        outlier_truth: truth,
    })
}

/// Adds Gaussian noise to every coordinate and impulsive offsets to a
/// uniformly chosen subset of `round(P_o · N)` matches.
///
/// An impulsive offset hits all four points of the match; each point gets a
/// uniformly random direction with magnitude uniform in `sigma_j_range`.
pub fn corrupt_matches(matches: &[QuadMatch], cfg: &CorruptionConfig) -> Result<(Vec<QuadMatch>, Vec<bool>)> {
    cfg.validate_noise()?;

    let n = matches.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut out = matches.to_vec();
    if cfg.sigma_n > 0.0 {
        let normal = Normal::new(0.0, cfg.sigma_n).expect("validated sigma_n");
        for q in out.iter_mut() {
            let mut a = q.to_array();
            for x in a.iter_mut() {
                *x += normal.sample(&mut rng);
            }
            *q = QuadMatch::from_array(&a);
        }
    }

    let count = (cfg.outlier_fraction * n as f64).round_ties_even() as usize;
    let mut mask = vec![false; n];
    let (lo, hi) = cfg.sigma_j_range;
    for j in index::sample(&mut rng, n, count.min(n)).into_iter() {
        mask[j] = true;
        let mut a = out[j].to_array();
        for p in 0..4 {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let magnitude = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let offset = Vector2::new(angle.cos(), angle.sin()) * magnitude;
            a[2 * p] += offset.x;
            a[2 * p + 1] += offset.y;
        }
        out[j] = QuadMatch::from_array(&a);
    }
    Ok((out, mask))
}

impl SyntheticScene {
    /// Largest reprojection residual of the clean matches against the
    /// stored 3D points and motion.
    pub fn clean_reprojection_residual(&self) -> f64 {
        self.points_3d
            .iter()
            .zip(&self.matches_clean)
            .map(|(x, q)| {
                let p = QuadMatch::from_point(&self.rig, &self.motion_true, x)
                    .expect("stored points are visible");
                p.points()
                    .iter()
                    .zip(q.points())
                    .map(|(a, b)| (*a - *b).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Writes the plain-text dump: a header with rig and seed, then one line
    /// per corrupted match (8 coordinates and a 0/1 outlier label).
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.rig.intrinsics;
        let c = &self.config;
        writeln!(
            w,
            "# rdcr-scene f={} cu={} cv={} baseline={} seed={} n={} outlier_fraction={} sigma_n={} sigma_j={},{}",
            k.f,
            k.cu,
            k.cv,
            self.rig.baseline,
            c.seed,
            c.n_matches,
            c.outlier_fraction,
            c.sigma_n,
            c.sigma_j_range.0,
            c.sigma_j_range.1
        )?;
        for (q, &o) in self.matches_corrupt.iter().zip(&self.outlier_truth) {
            let mut line = String::new();
            for x in q.to_array() {
                write!(line, "{x} ").expect("writing to a String");
            }
            line.push(if o { '1' } else { '0' });
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Contents of a scene dump.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneDump {
    pub rig: StereoRig,
    pub seed: u64,
    pub matches: Vec<QuadMatch>,
    pub outlier_truth: Vec<bool>,
}

/// Reads a dump produced by [`SyntheticScene::write_dump`].
pub fn read_dump<R: BufRead>(r: R, source_name: &str) -> Result<SceneDump> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let header = header?;
    let mut fields = std::collections::HashMap::new();
    for tok in header.trim_start_matches('#').split_whitespace().skip(1) {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get = |key: &str| -> Result<f64> {
        fields
            .get(key)
            .ok_or_else(|| parse_err(1, format!("header missing {key}")))?
            .parse::<f64>()
            .map_err(|e| parse_err(1, format!("{key}: {e}")))
    };
    let rig = StereoRig::new(CameraIntrinsics::new(get("f")?, get("cu")?, get("cv")?)?, get("baseline")?)?;
    let seed = fields
        .get("seed")
        .ok_or_else(|| parse_err(1, "header missing seed".into()))?
        .parse::<u64>()
        .map_err(|e| parse_err(1, format!("seed: {e}")))?;

    let mut matches = Vec::new();
    let mut truth = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 9 {
            return Err(parse_err(line_no, format!("expected 9 fields, found {}", toks.len())));
        }
        let mut a = [0.0; 8];
        for (slot, tok) in a.iter_mut().zip(&toks[..8]) {
            *slot = tok
                .parse()
                .map_err(|e| parse_err(line_no, format!("{tok}: {e}")))?;
        }
        let label = match toks[8] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line_no, format!("label must be 0 or 1, got {other}"))),
        };
        matches.push(QuadMatch::from_array(&a));
        truth.push(label);
    }
    Ok(SceneDump {
        rig,
        seed,
        matches,
        outlier_truth: truth,
    })
}

/// Displacement of each point of `b` relative to `a`.
pub fn point_offsets(a: &QuadMatch, b: &QuadMatch) -> [f64; 4] {
    let pa = a.points();
    let pb = b.points();
    let d = |x: &Point2<f64>, y: &Point2<f64>| (*y - *x).norm();
    [d(pa[0], pb[0]), d(pa[1], pb[1]), d(pa[2], pb[2]), d(pa[3], pb[3])]
}
