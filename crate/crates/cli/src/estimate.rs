//! `cm estimate` and `cm bound-trace`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use cmbnb::bounds::{discs_for_cube, write_disc_csv, Mode, SearchCube};
use cmbnb::events::{split_windows, CameraIntrinsics, Event, EventWindow};
use cmbnb::image::KernelSpec;
use cmbnb::solvers::{grid_oracle, solve_bnb, solve_local, write_trace_csv, Objective, SolveResult, SolverConfig};
use cmbnb::warp::{AngularVelocity, PreparedWindow};
use nalgebra::Vector3;
use rayon::prelude::*;

use crate::config::ConfigFile;
use crate::records::{write_records, RunRecord};
use crate::{data, inputs, usage, CliResult, Failure, InputArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    BnbDiscrete,
    BnbContinuous,
    LocalGd,
    LocalReward,
    Grid,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BnbDiscrete => "bnb-discrete",
            Method::BnbContinuous => "bnb-continuous",
            Method::LocalGd => "local-gd",
            Method::LocalReward => "local-reward",
            Method::Grid => "grid",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Method as ValueEnum>::from_str(s, true)
    }
}

/// Solver options shared by `estimate` and `bound-trace`. Unset options fall
/// back to the config file, then to the defaults shown.
#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Estimation method [default: bnb-discrete].
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Window duration in seconds [default: 0.010].
    #[arg(long)]
    pub window: Option<f64>,
    /// Largest angular rate searched, rad/s [default: 20].
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Absolute optimality gap [default: 1e-3 N^2 / P].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Relative optimality gap [default: 1e-2].
    #[arg(long)]
    pub tau_rel: Option<f64>,
    /// Kernel bandwidth of the continuous image, pixels [default: 1.0].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Branch-and-bound dequeue limit [default: 1000000].
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Grid points per axis for `--method grid` [default: 21].
    #[arg(long)]
    pub grid_steps: Option<usize>,
    /// Start local methods from the previous window's estimate instead of 0.
    #[arg(long)]
    pub warm_start: bool,
    /// Use all cores.
    #[arg(long)]
    pub parallel: bool,
    /// Exit with status 3 if any solve ends without a certificate.
    #[arg(long)]
    pub require_certificate: bool,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Only use events from the first `duration` seconds of the stream.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bound traces of the branch-and-bound methods, all windows.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundTraceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Zero-based index of the non-empty window to trace.
    #[arg(long, default_value_t = 0)]
    pub window_index: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the uncertainty discs of the final cube to this CSV.
    #[arg(long)]
    pub dump_discs: Option<PathBuf>,
}

/// Fully resolved solver settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub method: Method,
    pub window: f64,
    pub solver: SolverConfig,
    pub grid_steps: usize,
    pub warm_start: bool,
    pub require_certificate: bool,
    pub undistort: bool,
}

impl Settings {
    pub fn resolve(args: &SolveArgs, undistort: bool) -> CliResult<Self> {
        let file = ConfigFile::load(args.config.as_deref())?;
        let method = file.pick(args.method, "method", Method::BnbDiscrete)?;
        let window = file.pick(args.window, "window", 0.010)?;
        if !(window > 0.0 && window.is_finite()) {
            return Err(usage(anyhow!("window must be positive, got {window}")));
        }
        let sigma = file.pick(args.sigma, "sigma", 1.0)?;
        let kernel = KernelSpec::with_sigma(sigma).map_err(usage)?;
        let mode = match method {
            Method::BnbDiscrete | Method::Grid => Mode::Discrete,
            _ => Mode::Continuous(kernel),
        };
        let tau = match args.tau {
            Some(t) => Some(t),
            None => file.get("tau")?,
        };
        let solver = SolverConfig {
            r_max: file.pick(args.rmax, "rmax", 20.0)?,
            tau,
            tau_rel: file.pick(args.tau_rel, "tau_rel", 1e-2)?,
            mode,
            max_iterations: file.pick(args.max_iterations, "max_iterations", 1_000_000)?,
            parallel: file.switch(args.parallel, "parallel")?,
            record_trace: false,
        };
        solver.validate().map_err(usage)?;
        let grid_steps = file.pick(args.grid_steps, "grid_steps", 21)?;
        if grid_steps < 2 {
            return Err(usage(anyhow!("grid needs at least 2 steps per axis")));
        }
        Ok(Self {
            method,
            window,
            solver,
            grid_steps,
            warm_start: file.switch(args.warm_start, "warm_start")?,
            require_certificate: file.switch(args.require_certificate, "require_certificate")?,
            undistort: file.switch(undistort, "undistort")?,
        })
    }
}

/// Solves one window. Grid results carry no bound and no certificate.
pub fn solve_window(
    w: &EventWindow,
    cam: &CameraIntrinsics,
    s: &Settings,
    init: &AngularVelocity,
    trace: bool,
) -> CliResult<SolveResult> {
    let cfg = SolverConfig {
        record_trace: trace,
        ..s.solver
    };
    let out = match s.method {
        Method::BnbDiscrete | Method::BnbContinuous => solve_bnb(w, cam, &cfg),
        Method::LocalGd => solve_local(w, cam, &cfg, Objective::Contrast, init),
        Method::LocalReward => solve_local(w, cam, &cfg, Objective::Reward, init),
        Method::Grid => {
            let start = std::time::Instant::now();
            grid_oracle(w, cam, &cfg, s.grid_steps).map(|(omega, contrast)| SolveResult {
                omega,
                contrast,
                upper_bound_at_exit: None,
                iterations: (s.grid_steps as u64).pow(3),
                cubes_pruned: 0,
                runtime: start.elapsed(),
                trace: None,
                certified: false,
                gap_threshold: 0.0,
                final_half_width: 0.0,
            })
        }
    };
    out.map_err(usage)
}

fn record(w: &EventWindow, method: Method, r: &SolveResult) -> RunRecord {
    RunRecord {
        window_start: w.source_offset(),
        window_duration: w.t_max(),
        method: method.name().to_string(),
        wx: r.omega.x,
        wy: r.omega.y,
        wz: r.omega.z,
        contrast: r.contrast,
        upper_bound: r.upper_bound_at_exit,
        iterations: r.iterations,
        runtime_s: r.runtime.as_secs_f64(),
        certified: r.certified,
    }
}

fn is_bnb(m: Method) -> bool {
    matches!(m, Method::BnbDiscrete | Method::BnbContinuous)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(data)
}

fn windows(events: &[Event], window: f64) -> CliResult<Vec<EventWindow>> {
    if events.is_empty() {
        return Err(data(anyhow!("event file holds no events")));
    }
    split_windows(events, window).map_err(data)
}

pub fn run(args: &EstimateArgs) -> CliResult<()> {
    let s = Settings::resolve(&args.solve, args.input.undistort)?;
    let (calib, mut events) = inputs::load(&args.input, s.undistort)?;
    if let Some(d) = args.duration {
        let t0 = events.first().map_or(0.0, |e| e.t);
        events.retain(|e| e.t < t0 + d);
    }
    let cam = calib.intrinsics;
    let windows = windows(&events, s.window)?;
    let want_trace = args.trace.is_some() && is_bnb(s.method);

    let results: Vec<SolveResult> = if s.warm_start && !is_bnb(s.method) {
        let mut prev = Vector3::zeros();
        let mut out = Vec::with_capacity(windows.len());
        for w in &windows {
            let r = solve_window(w, &cam, &s, &prev, want_trace)?;
            prev = r.omega;
            out.push(r);
        }
        out
    } else if s.solver.parallel {
        windows
            .par_iter()
            .map(|w| solve_window(w, &cam, &s, &Vector3::zeros(), want_trace))
            .collect::<CliResult<_>>()?
    } else {
        windows
            .iter()
            .map(|w| solve_window(w, &cam, &s, &Vector3::zeros(), want_trace))
            .collect::<CliResult<_>>()?
    };

    let records: Vec<RunRecord> = windows.iter().zip(&results).map(|(w, r)| record(w, s.method, r)).collect();
    match &args.out {
        Some(p) => write_records(create(p)?, &records)?,
        None => write_records(std::io::stdout().lock(), &records)?,
    }
    if let Some(p) = &args.trace {
        let mut f = create(p)?;
        let io = |e: std::io::Error| data(anyhow::Error::from(e).context(format!("writing {}", p.display())));
        writeln!(f, "window_start,iteration,elapsed_s,lower,upper").map_err(io)?;
        for (w, r) in windows.iter().zip(&results) {
            for row in r.trace.iter().flatten() {
                writeln!(
                    f,
                    "{},{},{:.9},{},{}",
                    w.source_offset(),
                    row.iteration,
                    row.elapsed_s,
                    row.lower,
                    row.upper
                )
                .map_err(io)?;
            }
        }
        f.flush().map_err(io)?;
    }
    let uncertified = records.iter().filter(|r| is_bnb(s.method) && !r.certified).count();
    if s.require_certificate && (uncertified > 0 || !is_bnb(s.method)) {
        return Err(Failure::Uncertified(format!(
            "{} of {} windows finished without a certificate",
            if is_bnb(s.method) { uncertified } else { records.len() },
            records.len()
        )));
    }
    Ok(())
}

pub fn run_trace(args: &BoundTraceArgs) -> CliResult<()> {
    let mut s = Settings::resolve(&args.solve, args.input.undistort)?;
    if !is_bnb(s.method) {
        if args.solve.method.is_some() {
            return Err(usage(anyhow!("bound-trace needs a bnb method")));
        }
        s.method = Method::BnbDiscrete;
        s.solver.mode = Mode::Discrete;
    }
    let (calib, events) = inputs::load(&args.input, s.undistort)?;
    let cam = calib.intrinsics;
    let windows = windows(&events, s.window)?;
    let w = windows.get(args.window_index).ok_or_else(|| {
        usage(anyhow!(
            "window index {} out of range ({} windows)",
            args.window_index,
            windows.len()
        ))
    })?;
    let r = solve_window(w, &cam, &s, &Vector3::zeros(), true)?;
    let trace = r.trace.as_deref().unwrap_or_default();
    match &args.out {
        Some(p) => write_trace_csv(create(p)?, trace),
        None => write_trace_csv(std::io::stdout().lock(), trace),
    }
    .context("writing trace")
    .map_err(data)?;
    if let Some(p) = &args.dump_discs {
        let cube = SearchCube::new(r.omega, r.final_half_width);
        let discs = discs_for_cube(&cube, &PreparedWindow::new(w, &cam));
        write_disc_csv(create(p)?, &discs).context("writing discs").map_err(data)?;
    }
    if s.require_certificate && !r.certified {
        return Err(Failure::Uncertified("bound trace ended without a certificate".into()));
    }
    Ok(())
}
