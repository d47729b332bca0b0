//! Seeded synthetic sweeps over match count and outlier fraction.
//!
//! Every (N_c, P_o, repetition) triple gets its own scene seed, and every
//! method runs on that same scene. Jobs run on the rayon pool and are
//! collected in grid order, so outputs do not depend on the thread count.
//! Wall times go to a separate file, which keeps the record and aggregate
//! files byte-reproducible.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::RansacConfig;
use crate::error::{Error, Result};
use crate::estimator::{estimate_with, Method, PipelineConfig};
use crate::geometry::{CameraIntrinsics, StereoRig};
use crate::metrics::{detection_stats, relative_error};
use crate::rdcr::RdcrParams;
use crate::synthgen::{generate_scene, CorruptionConfig};

pub const RECORDS_FILE: &str = "sweep.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigParams {
    pub f: f64,
    pub cu: f64,
    pub cv: f64,
    pub baseline: f64,
}

impl Default for RigParams {
    fn default() -> Self {
        let r = StereoRig::kitti_00();
        RigParams {
            f: r.intrinsics.f,
            cu: r.intrinsics.cu,
            cv: r.intrinsics.cv,
            baseline: r.baseline,
        }
    }
}

impl RigParams {
    pub fn rig(&self) -> Result<StereoRig> {
        StereoRig::new(CameraIntrinsics::new(self.f, self.cu, self.cv)?, self.baseline)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Standard deviation of the Gaussian noise on every coordinate (px).
    pub sigma_n: f64,
    /// Range of impulsive offset magnitudes on outlier matches (px).
    pub sigma_j_range: (f64, f64),
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            sigma_n: 1.5,
            sigma_j_range: (2.0, 100.0),
        }
    }
}

fn default_repetitions() -> usize {
    50
}

fn default_methods() -> Vec<Method> {
    vec![Method::Rdcr, Method::Apg]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_matches_grid: Vec<usize>,
    pub outlier_fraction_grid: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub rig: RigParams,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub rdcr: RdcrParams,
    /// The seed field is ignored; each scene seeds its own sampler.
    #[serde(default)]
    pub ransac: RansacConfig,
}

impl SweepConfig {
    pub fn new(n_matches_grid: Vec<usize>, outlier_fraction_grid: Vec<f64>, repetitions: usize) -> Self {
        SweepConfig {
            n_matches_grid,
            outlier_fraction_grid,
            repetitions,
            base_seed: 0,
            methods: default_methods(),
            rig: RigParams::default(),
            noise: NoiseParams::default(),
            rdcr: RdcrParams::default(),
            ransac: RansacConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_matches_grid.is_empty() || self.outlier_fraction_grid.is_empty() {
            return Err(Error::InvalidConfig("grids must be nonempty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method is required".into()));
        }
        self.rig.rig()?;
        self.ransac.validate()?;
        for &n in &self.n_matches_grid {
            self.rdcr.validate(n)?;
            for &p in &self.outlier_fraction_grid {
                self.scene_config(n, p, 0).validate()?;
            }
        }
        Ok(())
    }

    fn scene_config(&self, n: usize, p: f64, seed: u64) -> CorruptionConfig {
        CorruptionConfig {
            n_matches: n,
            outlier_fraction: p,
            sigma_n: self.noise.sigma_n,
            sigma_j_range: self.noise.sigma_j_range,
            seed,
        }
    }
}

/// SplitMix64 finalizer; a fixed mixing function so seeds do not depend on
/// the standard library's hasher.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Scene seed of one grid cell repetition.
pub fn cell_seed(base_seed: u64, n_matches: usize, outlier_fraction: f64, repetition: usize) -> u64 {
    let mut h = mix(n_matches as u64);
    h = mix(h ^ outlier_fraction.to_bits());
    h = mix(h ^ repetition as u64);
    base_seed ^ h
}

/// One row of the record file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub n_matches: usize,
    pub outlier_fraction: f64,
    pub repetition: usize,
    pub seed: u64,
    pub true_positive: Option<usize>,
    pub false_positive: Option<usize>,
    pub false_negative: Option<usize>,
    pub true_negative: Option<usize>,
    pub removal_fraction: Option<f64>,
    pub excess_elimination: Option<f64>,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub relative_error: Option<f64>,
    pub apg_iterations: usize,
    pub rdcr_iterations: usize,
    pub lm_iterations: Option<usize>,
    /// Empty on success, otherwise the error message.
    pub error: String,
}

/// Wall time of one record, in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub method: Method,
    pub n_matches: usize,
    pub outlier_fraction: f64,
    pub repetition: usize,
    pub detection_s: f64,
    pub compression_s: f64,
    pub optimization_s: f64,
}

/// Per-(method, N_c, P_o) means over the successful repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub method: Method,
    pub n_matches: usize,
    pub outlier_fraction: f64,
    pub repetitions: usize,
    pub failures: usize,
    pub removal_fraction: Option<f64>,
    pub excess_elimination: Option<f64>,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub relative_error: Option<f64>,
    pub lm_iterations: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub timings: Vec<TimingRecord>,
    pub aggregate: Vec<AggregateRecord>,
}

fn pipeline_config(cfg: &SweepConfig, seed: u64) -> PipelineConfig {
    PipelineConfig {
        rdcr: cfg.rdcr,
        ransac: RansacConfig { seed, ..cfg.ransac },
        ..PipelineConfig::default()
    }
}

fn run_job(cfg: &SweepConfig, rig: &StereoRig, n: usize, p: f64, rep: usize) -> Vec<(SweepRecord, TimingRecord)> {
    let seed = cell_seed(cfg.base_seed, n, p, rep);
    let scene = generate_scene(rig, &cfg.scene_config(n, p, seed));
    cfg.methods
        .iter()
        .map(|&method| {
            let mut rec = SweepRecord {
                method,
                n_matches: n,
                outlier_fraction: p,
                repetition: rep,
                seed,
                true_positive: None,
                false_positive: None,
                false_negative: None,
                true_negative: None,
                removal_fraction: None,
                excess_elimination: None,
                accuracy: None,
                recall: None,
                relative_error: None,
                apg_iterations: 0,
                rdcr_iterations: 0,
                lm_iterations: None,
                error: String::new(),
            };
            let mut timing = TimingRecord {
                method,
                n_matches: n,
                outlier_fraction: p,
                repetition: rep,
                detection_s: 0.0,
                compression_s: 0.0,
                optimization_s: 0.0,
            };
            let outcome = scene.as_ref().map_err(|e| e.to_string()).and_then(|scene| {
                let est = estimate_with(method, &scene.matches_corrupt, rig, &pipeline_config(cfg, seed))
                    .map_err(|e| e.to_string())?;
                let stats = detection_stats(&est.mask, &scene.outlier_truth).map_err(|e| e.to_string())?;
                let err = relative_error(&est.motion, &scene.motion_true).map_err(|e| e.to_string())?;
                Ok((est, stats, err))
            });
            match outcome {
                Ok((est, stats, err)) => {
                    rec.true_positive = Some(stats.true_positive);
                    rec.false_positive = Some(stats.false_positive);
                    rec.false_negative = Some(stats.false_negative);
                    rec.true_negative = Some(stats.true_negative);
                    rec.removal_fraction = Some(stats.removal_fraction);
                    rec.excess_elimination = Some(stats.excess_elimination);
                    rec.accuracy = Some(stats.accuracy);
                    rec.recall = Some(stats.recall);
                    rec.relative_error = Some(err);
                    let d = &est.diagnostics;
                    rec.apg_iterations = d.apg_iterations;
                    rec.rdcr_iterations = d.rdcr_iterations;
                    rec.lm_iterations = d.lm.as_ref().map(|l| l.iterations);
                    timing.detection_s = d.timings.detection.as_secs_f64();
                    timing.compression_s = d.timings.compression.as_secs_f64();
                    timing.optimization_s = d.timings.optimization.as_secs_f64();
                }
                Err(msg) => {
                    log::warn!("{method} N={n} P_o={p} rep={rep}: {msg}");
                    rec.error = msg;
                }
            }
            (rec, timing)
        })
        .collect()
}

fn mean_of<I: Iterator<Item = f64>>(it: I) -> Option<f64> {
    let (sum, count) = it.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Means per (method, N_c, P_o), in grid order, summed in repetition order.
pub fn aggregate(cfg: &SweepConfig, records: &[SweepRecord]) -> Vec<AggregateRecord> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for &n in &cfg.n_matches_grid {
            for &p in &cfg.outlier_fraction_grid {
                let rows: Vec<&SweepRecord> = records
                    .iter()
                    .filter(|r| r.method == method && r.n_matches == n && r.outlier_fraction.to_bits() == p.to_bits())
                    .collect();
                let ok: Vec<&&SweepRecord> = rows.iter().filter(|r| r.error.is_empty()).collect();
                out.push(AggregateRecord {
                    method,
                    n_matches: n,
                    outlier_fraction: p,
                    repetitions: rows.len(),
                    failures: rows.len() - ok.len(),
                    removal_fraction: mean_of(ok.iter().filter_map(|r| r.removal_fraction)),
                    excess_elimination: mean_of(ok.iter().filter_map(|r| r.excess_elimination)),
                    accuracy: mean_of(ok.iter().filter_map(|r| r.accuracy)),
                    recall: mean_of(ok.iter().filter_map(|r| r.recall)),
                    relative_error: mean_of(ok.iter().filter_map(|r| r.relative_error)),
                    lm_iterations: mean_of(ok.iter().filter_map(|r| r.lm_iterations.map(|k| k as f64))),
                });
            }
        }
    }
    out
}

/// Runs the whole grid in memory.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let rig = cfg.rig.rig()?;
    let mut jobs = Vec::new();
    for &n in &cfg.n_matches_grid {
        for &p in &cfg.outlier_fraction_grid {
            for rep in 0..cfg.repetitions {
                jobs.push((n, p, rep));
            }
        }
    }
    let results: Vec<Vec<(SweepRecord, TimingRecord)>> = jobs
        .par_iter()
        .map(|&(n, p, rep)| run_job(cfg, &rig, n, p, rep))
        .collect();

    // Method-major order: all rows of the first method, then the next.
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for k in 0..cfg.methods.len() {
        for job in &results {
            records.push(job[k].0.clone());
            timings.push(job[k].1.clone());
        }
    }
    let aggregate = aggregate(cfg, &records);
    Ok(SweepOutput {
        records,
        timings,
        aggregate,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Paths written by [`write_sweep`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepFiles {
    pub records: PathBuf,
    pub aggregate: PathBuf,
    pub timings: PathBuf,
}

pub fn write_sweep(out_dir: &Path, output: &SweepOutput) -> Result<SweepFiles> {
    fs::create_dir_all(out_dir)?;
    let files = SweepFiles {
        records: out_dir.join(RECORDS_FILE),
        aggregate: out_dir.join(AGGREGATE_FILE),
        timings: out_dir.join(TIMINGS_FILE),
    };
    write_csv(&files.records, &output.records)?;
    write_csv(&files.aggregate, &output.aggregate)?;
    write_csv(&files.timings, &output.timings)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        let mut cfg = SweepConfig::new(vec![100], vec![0.1], 2);
        cfg.methods = vec![Method::Rdcr];
        cfg
    }

    #[test]
    fn counts_rows() {
        let out = run_sweep(&small()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.timings.len(), 2);
        assert_eq!(out.aggregate.len(), 1);
        assert_eq!(out.aggregate[0].repetitions, 2);
        assert!(out.records.iter().all(|r| r.error.is_empty()));
    }

    #[test]
    fn seeds_differ_across_cells_and_repetitions() {
        let a = cell_seed(0, 100, 0.1, 0);
        assert_ne!(a, cell_seed(0, 100, 0.1, 1));
        assert_ne!(a, cell_seed(0, 200, 0.1, 0));
        assert_ne!(a, cell_seed(0, 100, 0.3, 0));
        assert_eq!(cell_seed(7, 100, 0.1, 0), 7 ^ a);
    }

    #[test]
    fn methods_share_scenes() {
        let mut cfg = small();
        cfg.methods = vec![Method::Rdcr, Method::Cls];
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.records[0].seed, out.records[2].seed);
        assert_eq!(out.records[2].method, Method::Cls);
        assert_eq!(out.records[2].removal_fraction, Some(0.0));
    }

    #[test]
    fn toml_config() {
        let cfg = SweepConfig::from_toml(
            r#"
            n_matches_grid = [100, 200]
            outlier_fraction_grid = [0.1]
            repetitions = 3
            base_seed = 9
            methods = ["rdcr", "ransac"]
            [noise]
            sigma_n = 1.0
            [rig]
            f = 700.0
            cu = 600.0
            cv = 180.0
            baseline = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.repetitions, 3);
        assert_eq!(cfg.methods, vec![Method::Rdcr, Method::Ransac]);
        assert_eq!(cfg.noise.sigma_j_range, (2.0, 100.0));
        assert_eq!(cfg.rig.f, 700.0);
    }

    #[test]
    fn invalid_configs() {
        for text in [
            "n_matches_grid = []\noutlier_fraction_grid = [0.1]",
            "n_matches_grid = [100]\noutlier_fraction_grid = [0.1]\nrepetitions = 0",
            "n_matches_grid = [100]\noutlier_fraction_grid = [1.5]",
            "n_matches_grid = [5]\noutlier_fraction_grid = [0.1]",
            "n_matches_grid = [100]\noutlier_fraction_grid = [0.1]\nmethods = [\"lmeds\"]",
            "n_matches_grid = [100]\noutlier_fraction_grid = [0.1]\nunknown = 1",
        ] {
            assert!(matches!(SweepConfig::from_toml(text), Err(Error::InvalidConfig(_))), "{text}");
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let mut cfg = small();
        cfg.methods = vec![Method::Rdcr, Method::Ransac];
        let out = run_sweep(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_sweep(dir.path(), &out).unwrap();
        assert_eq!(read_records(&files.records).unwrap(), out.records);
        assert_eq!(read_aggregate(&files.aggregate).unwrap(), out.aggregate);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let mut rec = run_sweep(&small()).unwrap().records;
        rec[1].error = "boom".into();
        let agg = aggregate(&small(), &rec);
        assert_eq!(agg[0].failures, 1);
        assert_eq!(agg[0].accuracy, rec[0].accuracy);
    }
}
