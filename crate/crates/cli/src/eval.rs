//! `cm eval`: error statistics of estimate records against ground truth.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use cmbnb::events::{parse_ground_truth, GroundTruthTrack};
use cmbnb::solvers::error_metrics;
use nalgebra::Vector3;

use crate::records::{read_records, RunRecord};
use crate::{data, inputs, CliResult};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Records written by `cm estimate`.
    #[arg(long)]
    pub records: PathBuf,
    /// Ground-truth track, one `t wx wy wz` per line in rad/s.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report in deg/s instead of rad/s.
    #[arg(long)]
    pub deg: bool,
    /// Interpolate the track at the window midpoint instead of taking the
    /// nearest sample.
    #[arg(long)]
    pub interp: bool,
    /// Also write the summary CSV to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Mean and population standard deviation of ε and φ for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub windows: usize,
    pub mean_eps: f64,
    pub std_eps: f64,
    pub mean_phi: f64,
    pub std_phi: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn truth_for(track: &GroundTruthTrack, r: &RunRecord, interp: bool) -> Option<Vector3<f64>> {
    let (lo, hi) = (r.window_start, r.window_start + r.window_duration);
    let mid = 0.5 * (lo + hi);
    if interp {
        track.interpolate_within(mid, lo, hi)
    } else {
        track.nearest_within(mid, lo, hi)
    }
}

/// Per-method summaries, sorted by method name, plus the windows skipped for
/// lack of ground truth.
pub fn summarise(
    records: &[RunRecord],
    track: &GroundTruthTrack,
    interp: bool,
    scale: f64,
) -> (Vec<Summary>, Vec<(String, f64)>) {
    let mut errs: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut skipped = Vec::new();
    for r in records {
        let Some(truth) = truth_for(track, r, interp) else {
            skipped.push((r.method.clone(), r.window_start));
            continue;
        };
        let (eps, phi) = error_metrics(&truth, &Vector3::new(r.wx, r.wy, r.wz));
        let e = errs.entry(r.method.as_str()).or_default();
        e.0.push(eps * scale);
        e.1.push(phi * scale);
    }
    let out = errs
        .into_iter()
        .map(|(m, (eps, phi))| {
            let (mean_eps, std_eps) = mean_std(&eps);
            let (mean_phi, std_phi) = mean_std(&phi);
            Summary {
                method: m.to_string(),
                windows: eps.len(),
                mean_eps,
                std_eps,
                mean_phi,
                std_phi,
            }
        })
        .collect();
    (out, skipped)
}

pub fn write_csv(mut w: impl Write, rows: &[Summary]) -> std::io::Result<()> {
    writeln!(w, "method,windows,mean_eps,std_eps,mean_phi,std_phi")?;
    for s in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.method, s.windows, s.mean_eps, s.std_eps, s.mean_phi, s.std_phi
        )?;
    }
    Ok(())
}

pub fn write_table(mut w: impl Write, rows: &[Summary], unit: &str) -> std::io::Result<()> {
    let width = rows.iter().map(|s| s.method.len()).max().unwrap_or(0).max("method".len());
    let heads = [
        format!("mu(eps) {unit}"),
        format!("sigma(eps) {unit}"),
        format!("mu(phi) {unit}"),
        format!("sigma(phi) {unit}"),
    ];
    let col = heads.iter().map(String::len).max().unwrap_or(0).max(12);
    write!(w, "{:<width$}  {:>7}", "method", "windows")?;
    for h in &heads {
        write!(w, "  {h:>col$}")?;
    }
    writeln!(w)?;
    for s in rows {
        write!(w, "{:<width$}  {:>7}", s.method, s.windows)?;
        for v in [s.mean_eps, s.std_eps, s.mean_phi, s.std_phi] {
            write!(w, "  {v:>col$.4}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let records = read_records(inputs::open(&args.records)?)?;
    let track = parse_ground_truth(inputs::open(&args.truth)?)
        .with_context(|| format!("reading {}", args.truth.display()))
        .map_err(data)?;
    let (scale, unit) = if args.deg {
        (180.0 / std::f64::consts::PI, "deg/s")
    } else {
        (1.0, "rad/s")
    };
    let (rows, skipped) = summarise(&records, &track, args.interp, scale);
    for (m, t) in &skipped {
        eprintln!("cm: no ground truth within window at {t} s ({m}); excluded");
    }
    let mut out = std::io::stdout().lock();
    let io = |e: std::io::Error| data(anyhow::Error::from(e));
    write_table(&mut out, &rows, unit).map_err(io)?;
    writeln!(out).map_err(io)?;
    write_csv(&mut out, &rows).map_err(io)?;
    if let Some(p) = &args.out {
        let f = std::fs::File::create(p)
            .with_context(|| format!("creating {}", p.display()))
            .map_err(data)?;
        write_csv(f, &rows).map_err(io)?;
    }
    Ok(())
}
