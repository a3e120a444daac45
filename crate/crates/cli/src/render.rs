//! `cm render`: motion-compensated event image for a given rotation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use cmbnb::events::EventWindow;
use cmbnb::image::{contrast, render_continuous, render_discrete, EventImage, KernelSpec};
use nalgebra::Vector3;

use crate::{data, inputs, usage, CliResult, InputArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageMode {
    Discrete,
    Continuous,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Angular velocity `wx,wy,wz` in rad/s.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub omega: Vector3<f64>,
    #[arg(long, value_enum, default_value = "discrete")]
    pub mode: ImageMode,
    /// Kernel bandwidth for continuous images, pixels.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Start of the rendered span, seconds of the stream clock.
    #[arg(long)]
    pub start: Option<f64>,
    /// Length of the rendered span; the whole stream when omitted.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output image, `.pgm` or `.png`. A `.txt` sidecar is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("cannot parse {p:?} as a number")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected three finite comma-separated values, got {s:?}")),
    }
}

/// Sidecar path: the image path with `.txt` appended.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

fn write_image(img: &EventImage, path: &Path) -> CliResult<f64> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pgm") => {
            let mut f = File::create(path)
                .map(BufWriter::new)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(data)?;
            let scale = img.write_pgm(&mut f).map_err(data)?;
            f.flush().map_err(data)?;
            Ok(scale)
        }
        Some("png") => {
            let (bytes, scale) = img.to_gray8();
            let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes)
                .expect("buffer matches image size");
            buf.save(path)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(data)?;
            Ok(scale)
        }
        _ => Err(usage(anyhow!("output must end in .pgm or .png: {}", path.display()))),
    }
}

pub fn run(args: &RenderArgs) -> CliResult<()> {
    let (calib, mut events) = inputs::load(&args.input, args.input.undistort)?;
    let cam = calib.intrinsics;
    let start = args.start.unwrap_or_else(|| events.first().map_or(0.0, |e| e.t));
    let end = args.duration.map_or(f64::INFINITY, |d| start + d);
    events.retain(|e| e.t >= start && e.t < end);
    if events.is_empty() {
        return Err(data(anyhow!("no events in the requested span")));
    }
    for e in &mut events {
        e.t -= start;
    }
    let t_max = events.last().map_or(0.0, |e| e.t);
    let window = EventWindow::new(events, t_max, start).map_err(data)?;
    let img = match args.mode {
        ImageMode::Discrete => render_discrete(&window, &args.omega, &cam),
        ImageMode::Continuous => {
            let kernel = KernelSpec::with_sigma(args.sigma).map_err(usage)?;
            render_continuous(&window, &args.omega, &cam, &kernel)
        }
    };
    let c = contrast(&img);
    let scale = write_image(&img, &args.out)?;
    let side = sidecar_path(&args.out);
    let text = format!(
        "contrast={c}\nscale={scale}\nmode={}\nsigma={}\nomega={},{},{}\nevents={}\n",
        match args.mode {
            ImageMode::Discrete => "discrete",
            ImageMode::Continuous => "continuous",
        },
        args.sigma,
        args.omega.x,
        args.omega.y,
        args.omega.z,
        window.len()
    );
    std::fs::write(&side, text)
        .with_context(|| format!("writing {}", side.display()))
        .map_err(data)
}
