//! File formats and batch drivers behind the command-line front end.

pub mod io;
pub mod sequence;
pub mod sweep;

pub use io::{
    format_pose, format_sci, parse_pose, read_correspondence_file, read_correspondences, read_rig, read_rig_file,
    write_correspondences, write_rig,
};
pub use sequence::{pair_files, run_sequence, PairFailure, Trajectory};
pub use sweep::{
    aggregate, cell_seed, read_aggregate, read_records, run_sweep, write_sweep, AggregateRecord, NoiseParams,
    RigParams, SweepConfig, SweepFiles, SweepOutput, SweepRecord, TimingRecord,
};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "RDCR_THREADS";
