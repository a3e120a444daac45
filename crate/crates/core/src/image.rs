//! Event-image formation and the contrast / reward objectives.

use std::io::Write;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, EventWindow};
use crate::warp::{AngularVelocity, PreparedWindow};

/// Gaussian kernel `exp(-d^2 / (2 sigma^2))` with `delta(0) = 1`, cut to zero
/// beyond `truncation * sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    sigma: f64,
    truncation: f64,
}

impl KernelSpec {
    pub fn new(sigma: f64, truncation: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel bandwidth must be positive, got {sigma}")));
        }
        if !(truncation >= 3.0 && truncation.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel truncation must be at least 3 sigma, got {truncation}"
            )));
        }
        Ok(Self { sigma, truncation })
    }

    /// Bandwidth `sigma` with the default 6-sigma truncation.
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(sigma, 6.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Support radius in pixels.
    pub fn radius(&self) -> f64 {
        self.sigma * self.truncation
    }

    /// Kernel value at distance `d`; non-increasing in `d`.
    #[inline]
    pub fn eval(&self, d: f64) -> f64 {
        if d > self.radius() {
            0.0
        } else {
            (-d * d / (2.0 * self.sigma * self.sigma)).exp()
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            truncation: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
enum Pixels {
    Continuous(Vec<f64>),
    Discrete(Vec<u32>),
}

/// A `W x H` accumulation grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EventImage {
    width: usize,
    height: usize,
    pixels: Pixels,
}

impl EventImage {
    pub fn from_counts(width: usize, height: usize, counts: Vec<u32>) -> Self {
        assert_eq!(counts.len(), width * height, "count grid size mismatch");
        Self {
            width,
            height,
            pixels: Pixels::Discrete(counts),
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "value grid size mismatch");
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        Self {
            width,
            height,
            pixels: Pixels::Continuous(values),
        }
    }

    pub fn kind(&self) -> ImageKind {
        match self.pixels {
            Pixels::Continuous(_) => ImageKind::Continuous,
            Pixels::Discrete(_) => ImageKind::Discrete,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn value(&self, j: usize) -> f64 {
        match &self.pixels {
            Pixels::Continuous(v) => v[j],
            Pixels::Discrete(c) => c[j] as f64,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.pixel_count()).map(|j| self.value(j)).collect()
    }

    /// Integer counts of a discrete image.
    pub fn counts(&self) -> Option<&[u32]> {
        match &self.pixels {
            Pixels::Discrete(c) => Some(c),
            Pixels::Continuous(_) => None,
        }
    }

    pub fn sum(&self) -> f64 {
        match &self.pixels {
            Pixels::Continuous(v) => v.iter().sum(),
            Pixels::Discrete(c) => c.iter().map(|&x| x as u64).sum::<u64>() as f64,
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        match &self.pixels {
            Pixels::Continuous(v) => v.iter().map(|x| x * x).sum(),
            Pixels::Discrete(c) => c.iter().map(|&x| (x as u64) * (x as u64)).sum::<u64>() as f64,
        }
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.pixel_count() as f64
    }

    /// 8-bit rendering with the maximum pixel mapped to 255. Returns the
    /// bytes and the factor `scale` such that `byte = round(value * scale)`.
    pub fn to_gray8(&self) -> (Vec<u8>, f64) {
        let max = (0..self.pixel_count()).map(|j| self.value(j)).fold(0.0, f64::max);
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let bytes = (0..self.pixel_count())
            .map(|j| (self.value(j) * scale).round().clamp(0.0, 255.0) as u8)
            .collect();
        (bytes, scale)
    }

    /// Binary PGM (P5) export, scaled as in [`EventImage::to_gray8`].
    pub fn write_pgm(&self, mut w: impl Write) -> Result<f64> {
        let (bytes, scale) = self.to_gray8();
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&bytes)?;
        Ok(scale)
    }
}

/// Exact contrast of integer counts: `(P * sum(H^2) - sum(H)^2) / P^2`.
pub(crate) fn contrast_from_counts(p: usize, sum: u64, sum_sq: u64) -> f64 {
    let p = p as i128;
    let num = p * sum_sq as i128 - (sum as i128) * (sum as i128);
    num as f64 / (p * p) as f64
}

/// Discrete event image: each pixel counts the warped events binned into it.
pub fn render_discrete(window: &EventWindow, omega: &AngularVelocity, cam: &CameraIntrinsics) -> EventImage {
    render_discrete_prepared(&PreparedWindow::new(window, cam), omega)
}

pub fn render_discrete_prepared(pw: &PreparedWindow, omega: &AngularVelocity) -> EventImage {
    let cam = pw.camera();
    let mut counts = vec![0u32; cam.pixel_count()];
    for u in pw.warp_all(omega).flatten() {
        if let Some(j) = cam.pixel_index(&u) {
            counts[j] += 1;
        }
    }
    EventImage::from_counts(cam.width, cam.height, counts)
}

/// Adds `kernel(|x_j - u|)` to every pixel centre within the kernel support.
pub(crate) fn splat(values: &mut [f64], cam: &CameraIntrinsics, u: &Vector2<f64>, kernel: &KernelSpec) {
    let r = kernel.radius();
    let (c0, c1) = clamp_range(u.x - r, u.x + r, cam.width);
    let (r0, r1) = clamp_range(u.y - r, u.y + r, cam.height);
    for row in r0..r1 {
        let dy = row as f64 - u.y;
        for col in c0..c1 {
            let dx = col as f64 - u.x;
            values[row * cam.width + col] += kernel.eval((dx * dx + dy * dy).sqrt());
        }
    }
}

/// Integer coordinates in `[lo, hi]` clipped to `[0, n)`, as a half-open range.
pub(crate) fn clamp_range(lo: f64, hi: f64, n: usize) -> (usize, usize) {
    let a = lo.ceil().max(0.0);
    let b = (hi.floor() + 1.0).min(n as f64);
    if !(a < b) {
        return (0, 0);
    }
    (a as usize, b as usize)
}

/// Continuous event image `H_c(x_j) = sum_i delta(x_j - u'_i)`. Events that
/// warp behind the camera contribute nothing.
pub fn render_continuous(
    window: &EventWindow,
    omega: &AngularVelocity,
    cam: &CameraIntrinsics,
    kernel: &KernelSpec,
) -> EventImage {
    render_continuous_prepared(&PreparedWindow::new(window, cam), omega, kernel)
}

pub fn render_continuous_prepared(pw: &PreparedWindow, omega: &AngularVelocity, kernel: &KernelSpec) -> EventImage {
    let cam = pw.camera();
    let mut values = vec![0.0; cam.pixel_count()];
    for u in pw.warp_all(omega).flatten() {
        splat(&mut values, cam, &u, kernel);
    }
    EventImage::from_values(cam.width, cam.height, values)
}

/// Variance of the pixel values. Discrete images are evaluated exactly from
/// integer sums.
pub fn contrast(image: &EventImage) -> f64 {
    match &image.pixels {
        Pixels::Discrete(c) => {
            let (sum, sum_sq) = c.iter().fold((0u64, 0u64), |(s, q), &x| {
                let x = x as u64;
                (s + x, q + x * x)
            });
            contrast_from_counts(c.len(), sum, sum_sq)
        }
        Pixels::Continuous(v) => {
            let p = v.len() as f64;
            let mean = v.iter().sum::<f64>() / p;
            v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / p
        }
    }
}

/// Largest pixel value fed to `exp` in [`reward`].
pub const REWARD_CLAMP: f64 = 700.0;

/// `C + (1/P) sum_j (exp(-H_j) + exp(H_j))`, with `H_j` clamped at 700.
pub fn reward(image: &EventImage) -> f64 {
    let p = image.pixel_count() as f64;
    let tail: f64 = (0..image.pixel_count())
        .map(|j| {
            let h = image.value(j).min(REWARD_CLAMP);
            (-h).exp() + h.exp()
        })
        .sum();
    contrast(image) + tail / p
}
