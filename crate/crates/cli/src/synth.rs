//! `cm synth`: synthetic event stream, calibration and ground truth.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use cmbnb::events::{
    random_scene, synthesize, write_calibration, write_events, write_ground_truth, Calibration, CameraIntrinsics,
    Distortion, GroundTruthTrack, SynthSpec,
};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::render::parse_vec3;
use crate::{data, usage, CliResult};

/// Interval between ground-truth samples, seconds.
const TRUTH_STEP: f64 = 1e-3;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of static scene points.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// True angular velocity `wx,wy,wz` in rad/s.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub omega: Vector3<f64>,
    /// Sensor size `WIDTHxHEIGHT`.
    #[arg(long, default_value = "64x64", value_parser = parse_sensor)]
    pub sensor: (usize, usize),
    /// Focal length in pixels; the sensor width when omitted.
    #[arg(long)]
    pub focal: Option<f64>,
    /// Stream duration, seconds.
    #[arg(long, default_value_t = 0.01)]
    pub duration: f64,
    /// Events per second emitted by each scene point.
    #[arg(long, default_value_t = 5000.0)]
    pub rate: f64,
    /// Standard deviation of pixel noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Minimum distance of scene points from the sensor border at t = 0.
    #[arg(long, default_value_t = 2.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_events: PathBuf,
    #[arg(long)]
    pub out_truth: PathBuf,
    /// Also write the matching calibration file.
    #[arg(long)]
    pub out_calib: Option<PathBuf>,
}

pub fn parse_sensor(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let dim = |v: &str| v.trim().parse::<usize>().ok().filter(|&d| d > 0);
    match (dim(w), dim(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(format!("expected positive WIDTHxHEIGHT, got {s:?}")),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(data)
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let (w, h) = args.sensor;
    let f = args.focal.unwrap_or(w as f64);
    let cam = CameraIntrinsics::new(f, f, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, w, h).map_err(usage)?;
    if args.points == 0 {
        return Err(usage(anyhow!("need at least one scene point")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let scene = random_scene(args.points, &cam, args.margin, &mut rng);
    let spec = SynthSpec {
        t_max: args.duration,
        rate: args.rate,
        noise_px: args.noise,
    };
    let (window, omega) = synthesize(&scene, args.omega, &cam, &spec, &mut rng).map_err(usage)?;

    let mut out = create(&args.out_events)?;
    write_events(&mut out, window.events()).map_err(data)?;
    out.flush().map_err(data)?;

    let steps = (args.duration / TRUTH_STEP).ceil() as usize;
    let samples = (0..=steps)
        .map(|k| ((k as f64 * TRUTH_STEP).min(args.duration), omega))
        .collect::<Vec<_>>();
    let mut samples = samples;
    samples.dedup_by(|a, b| a.0 == b.0);
    let track = GroundTruthTrack::new(samples).map_err(usage)?;
    let mut out = create(&args.out_truth)?;
    write_ground_truth(&mut out, &track).map_err(data)?;
    out.flush().map_err(data)?;

    if let Some(p) = &args.out_calib {
        let mut out = create(p)?;
        write_calibration(
            &mut out,
            &Calibration {
                intrinsics: cam,
                distortion: Distortion::default(),
            },
        )
        .map_err(data)?;
        out.flush().map_err(data)?;
    }
    eprintln!("cm: wrote {} events", window.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_parsing() {
        assert_eq!(parse_sensor("64x48").unwrap(), (64, 48));
        assert!(parse_sensor("64").is_err());
        assert!(parse_sensor("0x4").is_err());
    }
}
