//! Chains per-pair motions from a directory of correspondence files into a
//! KITTI-style trajectory.
//!
//! Files are processed in lexicographic order of their names. The estimated
//! motion of a pair maps frame-`i` camera coordinates to frame `i+1`, so the
//! camera-to-world pose advances as `T_{i+1} = T_i · M⁻¹`. A pair that fails
//! to parse or estimate keeps the previous pose.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::io::{format_pose, read_correspondence_file};
use crate::error::Result;
use crate::estimator::{estimate_with, Method, PipelineConfig};
use crate::geometry::{Rigid3, StereoRig};

#[derive(Clone, Debug, PartialEq)]
pub struct PairFailure {
    pub file: PathBuf,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// One pose per frame; empty when there are no pair files.
    pub poses: Vec<Rigid3>,
    pub files: Vec<PathBuf>,
    pub failures: Vec<PairFailure>,
}

impl Trajectory {
    pub fn n_estimated(&self) -> usize {
        self.files.len() - self.failures.len()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.poses {
            writeln!(w, "{}", format_pose(p))?;
        }
        Ok(())
    }
}

/// Regular files of `dir`, sorted by name; hidden files are skipped.
pub fn pair_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if entry.file_type()?.is_file() && !hidden {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

pub fn run_sequence(dir: &Path, rig: &StereoRig, method: Method, cfg: &PipelineConfig) -> Result<Trajectory> {
    let files = pair_files(dir)?;
    let mut traj = Trajectory {
        poses: Vec::with_capacity(files.len() + 1),
        files: files.clone(),
        failures: Vec::new(),
    };
    if files.is_empty() {
        log::warn!("no correspondence files in {}; trajectory is empty", dir.display());
        return Ok(traj);
    }
    let mut pose = Rigid3::identity();
    traj.poses.push(pose);
    for file in &files {
        let step = read_correspondence_file(file).and_then(|m| estimate_with(method, &m, rig, cfg));
        match step {
            Ok(est) => pose = pose * est.motion.inverse(),
            Err(e) => {
                log::warn!("{}: {e}; keeping previous pose", file.display());
                traj.failures.push(PairFailure {
                    file: file.clone(),
                    message: e.to_string(),
                });
            }
        }
        traj.poses.push(pose);
    }
    Ok(traj)
}
