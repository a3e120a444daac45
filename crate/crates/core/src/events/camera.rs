use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Rays whose depth falls at or below this value cannot be projected.
pub const MIN_DEPTH: f64 = 1e-12;

/// Pinhole intrinsics with zero skew plus the sensor size.
///
/// Pixel `j = row * width + col` has its centre at integer coordinates
/// `(col, row)` and covers the half-open square
/// `[col - 0.5, col + 0.5) x [row - 0.5, row + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::Calibration(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::Calibration("principal point must be finite".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::Calibration(format!(
                "sensor size must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Number of pixels `P`.
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, 0.0, self.cx, //
            0.0, self.fy, self.cy, //
            0.0, 0.0, 1.0,
        )
    }

    /// `K^-1 [u; 1]`: the ray through pixel position `u`, with unit depth.
    pub fn bearing(&self, u: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new((u.x - self.cx) / self.fx, (u.y - self.cy) / self.fy, 1.0)
    }

    /// Pinhole projection `K^(1:2) r / K^(3) r`.
    pub fn project(&self, ray: &Vector3<f64>) -> Result<Vector2<f64>> {
        if ray.z <= MIN_DEPTH {
            return Err(Error::BehindCamera { depth: ray.z });
        }
        Ok(Vector2::new(
            self.fx * ray.x / ray.z + self.cx,
            self.fy * ray.y / ray.z + self.cy,
        ))
    }

    /// Whether `u` lies in `[0, W) x [0, H)`, the range accepted for raw
    /// event coordinates.
    pub fn contains_raw(&self, u: &Vector2<f64>) -> bool {
        u.x >= 0.0 && u.y >= 0.0 && u.x < self.width as f64 && u.y < self.height as f64
    }

    /// Index of the pixel whose half-open square contains `u`
    /// (round-to-nearest, ties upward), or `None` when `u` is off-sensor.
    pub fn pixel_index(&self, u: &Vector2<f64>) -> Option<usize> {
        let col = (u.x + 0.5).floor();
        let row = (u.y + 0.5).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some(row as usize * self.width + col as usize)
    }

    /// Centre of pixel `j`.
    pub fn pixel_centre(&self, j: usize) -> Vector2<f64> {
        Vector2::new((j % self.width) as f64, (j / self.width) as f64)
    }
}

/// Radial-tangential lens distortion (Brown-Conrady, OpenCV ordering).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
    pub k3: f64,
}

impl Distortion {
    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }

    /// Applies distortion to normalized image coordinates.
    pub fn distort(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        let radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
        let dx = 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x);
        let dy = self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y;
        (x * radial + dx, y * radial + dy)
    }

    /// Inverts [`Distortion::distort`] by fixed-point iteration.
    pub fn undistort(&self, xd: f64, yd: f64) -> (f64, f64) {
        let (mut x, mut y) = (xd, yd);
        for _ in 0..50 {
            let r2 = x * x + y * y;
            let radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
            let dx = 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x);
            let dy = self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y;
            let nx = (xd - dx) / radial;
            let ny = (yd - dy) / radial;
            let step = (nx - x).abs().max((ny - y).abs());
            x = nx;
            y = ny;
            if step < 1e-14 {
                break;
            }
        }
        (x, y)
    }

    /// Maps a distorted pixel position to its rectified position.
    pub fn undistort_pixel(&self, cam: &CameraIntrinsics, u: &Vector2<f64>) -> Vector2<f64> {
        let xd = (u.x - cam.cx) / cam.fx;
        let yd = (u.y - cam.cy) / cam.fy;
        let (x, y) = self.undistort(xd, yd);
        Vector2::new(cam.fx * x + cam.cx, cam.fy * y + cam.cy)
    }
}
