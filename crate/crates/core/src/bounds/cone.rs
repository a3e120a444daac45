//! Rotation uncertainty cones and their image-plane discs.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use nalgebra::{Vector2, Vector3};

use super::SearchCube;
use crate::error::Result;
use crate::events::{CameraIntrinsics, Event};
use crate::warp::{rotation_at, PreparedWindow};

/// Extreme rays of a cone must keep at least this depth to be projected.
const MIN_RAY_DEPTH: f64 = 1e-9;

/// Half-angle bound on how far `R(t; omega) v` can move from
/// `R(t; omega_c) v` over the cube: half the cube diagonal times `t`.
pub fn rotation_uncertainty(cube: &SearchCube, t: f64) -> f64 {
    cube.half_diagonal() * t
}

/// Projection of an uncertainty cone onto the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub centre: Vector2<f64>,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Unit direction of the major axis in the image.
    pub major_dir: Vector2<f64>,
}

/// Disc enclosing every position an event can warp to over a cube.
///
/// `valid == false` means the cone reaches the principal plane; such a disc
/// has infinite radius and bounds treat it as reaching every pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyDisc {
    pub centre: Vector2<f64>,
    pub radius: f64,
    pub ellipse: Ellipse,
    /// Disc lies inside `[-0.5, W - 0.5) x [-0.5, H - 0.5)`.
    pub on_image: bool,
    pub valid: bool,
}

impl UncertaintyDisc {
    fn invalid(centre: Vector2<f64>) -> Self {
        Self {
            centre,
            radius: f64::INFINITY,
            ellipse: Ellipse {
                centre,
                semi_major: f64::INFINITY,
                semi_minor: f64::INFINITY,
                major_dir: Vector2::x(),
            },
            on_image: false,
            valid: false,
        }
    }

    /// Whether `x` lies in the closed disc, with `tol` slack.
    pub fn contains(&self, x: &Vector2<f64>, tol: f64) -> bool {
        !self.valid || (x - self.centre).norm() <= self.radius + tol
    }
}

fn disc_on_image(cam: &CameraIntrinsics, c: &Vector2<f64>, r: f64) -> bool {
    c.x - r >= -0.5
        && c.y - r >= -0.5
        && c.x + r < cam.width as f64 - 0.5
        && c.y + r < cam.height as f64 - 0.5
}

/// Builds the disc for one event from its rotated ray `R(t; omega_c) b` and
/// the cone half-angle.
pub(crate) fn disc_from_ray(ray: &Vector3<f64>, alpha: f64, cam: &CameraIntrinsics) -> UncertaintyDisc {
    let axis = ray.normalize();
    if alpha == 0.0 {
        // Same arithmetic as the warp, so binning agrees bit for bit.
        return match cam.project(ray) {
            Ok(c) => UncertaintyDisc {
                centre: c,
                radius: 0.0,
                ellipse: Ellipse {
                    centre: c,
                    semi_major: 0.0,
                    semi_minor: 0.0,
                    major_dir: Vector2::x(),
                },
                on_image: disc_on_image(cam, &c, 0.0),
                valid: true,
            },
            Err(_) => UncertaintyDisc::invalid(Vector2::zeros()),
        };
    }
    let fallback = cam.project(&axis).unwrap_or_else(|_| Vector2::zeros());
    if alpha >= FRAC_PI_2 {
        return UncertaintyDisc::invalid(fallback);
    }

    // Edge rays at angle alpha from the axis: axis + tan(alpha) * dir.
    let r = alpha.tan();
    let n = Vector3::z();
    let y_raw = axis.cross(&axis.cross(&n));
    let (y_dir, z_dir) = match y_raw.try_normalize(1e-12) {
        Some(y) => (y, y.cross(&n).normalize()),
        None => (Vector3::x(), Vector3::y()),
    };
    let rays = [axis - y_dir * r, axis + y_dir * r, axis - z_dir * r, axis + z_dir * r];
    if rays.iter().any(|v| v.z <= MIN_RAY_DEPTH) {
        return UncertaintyDisc::invalid(fallback);
    }
    let norm = |v: &Vector3<f64>| Vector2::new(v.x / v.z, v.y / v.z);
    let px = |v: &Vector3<f64>| {
        let q = norm(v);
        Vector2::new(cam.fx * q.x + cam.cx, cam.fy * q.y + cam.cy)
    };
    let (ya, yb, za, zb) = (px(&rays[0]), px(&rays[1]), px(&rays[2]), px(&rays[3]));
    let centre = (ya + yb) * 0.5;
    let semi_major = (yb - ya).norm() * 0.5;
    let semi_minor = (zb - za).norm() * 0.5;
    let major_dir = (yb - ya).try_normalize(0.0).unwrap_or_else(Vector2::x);
    // With unequal focal lengths the pixel-space ellipse is a stretched copy of
    // the normalized-plane one; scale its semi-major by the larger focal length.
    let radius = if cam.fx == cam.fy {
        semi_major
    } else {
        (norm(&rays[1]) - norm(&rays[0])).norm() * 0.5 * cam.fx.max(cam.fy)
    };
    UncertaintyDisc {
        centre,
        radius,
        ellipse: Ellipse {
            centre,
            semi_major,
            semi_minor,
            major_dir,
        },
        on_image: disc_on_image(cam, &centre, radius),
        valid: true,
    }
}

/// Projects the uncertainty cone of `event` over `cube` onto the image.
pub fn project_cone(cube: &SearchCube, event: &Event, cam: &CameraIntrinsics) -> UncertaintyDisc {
    let ray = rotation_at(&cube.centre, event.t) * cam.bearing(&event.u);
    disc_from_ray(&ray, rotation_uncertainty(cube, event.t), cam)
}

/// Discs for every event of a prepared window.
pub fn discs_for_cube(cube: &SearchCube, pw: &PreparedWindow) -> Vec<UncertaintyDisc> {
    let cam = pw.camera();
    (0..pw.len())
        .map(|i| {
            let t = pw.times()[i];
            disc_from_ray(&pw.rotated(i, &cube.centre), rotation_uncertainty(cube, t), cam)
        })
        .collect()
}

/// Diagnostic CSV: `event,cx,cy,rho,a,b,on_image,valid`.
pub fn write_disc_csv(mut w: impl Write, discs: &[UncertaintyDisc]) -> Result<()> {
    writeln!(w, "event,cx,cy,rho,a,b,on_image,valid")?;
    for (i, d) in discs.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            i,
            d.centre.x,
            d.centre.y,
            d.radius,
            d.ellipse.semi_major,
            d.ellipse.semi_minor,
            d.on_image as u8,
            d.valid as u8
        )?;
    }
    Ok(())
}
