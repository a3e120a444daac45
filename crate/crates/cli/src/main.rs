//! `cm`: estimate, render, synthesise and evaluate rotational motion from
//! event streams.

mod config;
mod estimate;
mod eval;
mod inputs;
mod records;
mod render;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration values.
    Usage(anyhow::Error),
    /// Unreadable, unwritable or malformed files.
    Data(anyhow::Error),
    /// A solve finished without a certificate under `--require-certificate`.
    Uncertified(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Uncertified(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Data(e) => write!(f, "{e:#}"),
            Failure::Uncertified(m) => write!(f, "{m}"),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

pub fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

#[derive(Parser)]
#[command(name = "cm", version, about = "Rotational motion estimation from event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate angular velocity for every window of an event file.
    Estimate(estimate::EstimateArgs),
    /// Render the motion-compensated event image for a given rotation.
    Render(render::RenderArgs),
    /// Compare estimate records with a ground-truth track.
    Eval(eval::EvalArgs),
    /// Generate a synthetic event stream and its ground truth.
    Synth(synth::SynthArgs),
    /// Record the bound evolution of branch and bound on one window.
    BoundTrace(estimate::BoundTraceArgs),
}

/// Event and calibration inputs shared by several commands.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Event file, one `t x y p` per line.
    #[arg(long)]
    pub events: PathBuf,
    /// Calibration file of `key=value` pairs.
    #[arg(long)]
    pub calib: PathBuf,
    /// Apply the calibration's lens distortion model to event coordinates.
    #[arg(long)]
    pub undistort: bool,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Estimate(a) => estimate::run(&a),
        Command::Render(a) => render::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Synth(a) => synth::run(&a),
        Command::BoundTrace(a) => estimate::run_trace(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cm: {f}");
            ExitCode::from(f.code())
        }
    }
}
