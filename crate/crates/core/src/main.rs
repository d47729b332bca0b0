use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rdcr::cli::{self, SweepConfig, THREADS_ENV};
use rdcr::estimator::{estimate_with, Method, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "rdcr", version, about = "Robust stereo visual odometry from quadruple matches")]
struct Cli {
    /// Worker threads for sweeps (defaults to the number of cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthetic sweep over match count and outlier fraction.
    Sweep {
        /// TOML sweep configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for sweep.csv, aggregate.csv and timings.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimates one frame-pair motion and prints it as a KITTI pose line.
    Estimate {
        #[arg(long)]
        matches: PathBuf,
        #[arg(long)]
        rig: PathBuf,
        #[arg(long, default_value = "rdcr")]
        method: Method,
        /// Refit on matches whose reprojection error is below this many pixels.
        #[arg(long)]
        refine: Option<f64>,
    },
    /// Chains a directory of pair files into a KITTI trajectory.
    Sequence {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "rdcr")]
        method: Method,
        #[arg(long)]
        refine: Option<f64>,
    },
}

fn pipeline(refine: Option<f64>) -> rdcr::Result<PipelineConfig> {
    if let Some(gate) = refine {
        if !(gate > 0.0 && gate.is_finite()) {
            return Err(rdcr::Error::InvalidConfig(format!("refine gate must be positive, got {gate}")));
        }
    }
    Ok(PipelineConfig {
        refine_threshold: refine,
        ..PipelineConfig::default()
    })
}

fn run(cli: Cli) -> rdcr::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(rdcr::Error::InvalidConfig(format!("{THREADS_ENV} must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| rdcr::Error::InvalidConfig(e.to_string()))?;
    }
    match cli.command {
        Command::Sweep { config, out } => {
            let cfg = SweepConfig::load(&config)?;
            let output = cli::run_sweep(&cfg)?;
            let files = cli::write_sweep(&out, &output)?;
            let failed = output.records.iter().filter(|r| !r.error.is_empty()).count();
            log::info!(
                "{} rows ({failed} failed) written to {}",
                output.records.len(),
                files.records.display()
            );
        }
        Command::Estimate {
            matches,
            rig,
            method,
            refine,
        } => {
            let rig = cli::read_rig_file(&rig)?;
            let data = cli::read_correspondence_file(&matches)?;
            let est = estimate_with(method, &data, &rig, &pipeline(refine)?)?;
            let mut out = io::stdout().lock();
            writeln!(out, "{}", cli::format_pose(&est.motion))?;
            writeln!(out, "# inliers {} of {}", est.mask.n_inliers(), data.len())?;
            if let Some(lm) = &est.diagnostics.lm {
                writeln!(out, "# lm_iterations {} final_cost {:e}", lm.iterations, lm.final_cost)?;
            }
        }
        Command::Sequence {
            dir,
            rig,
            out,
            method,
            refine,
        } => {
            let rig = cli::read_rig_file(&rig)?;
            let traj = cli::run_sequence(&dir, &rig, method, &pipeline(refine)?)?;
            let mut w = BufWriter::new(fs::File::create(&out)?);
            traj.write(&mut w)?;
            w.flush()?;
            log::info!(
                "{} of {} pairs estimated; trajectory written to {}",
                traj.n_estimated(),
                traj.files.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
