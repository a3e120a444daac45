//! Synthetic event streams with known angular velocity.

use nalgebra::{Rotation3, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{CameraIntrinsics, Event, EventWindow};
use crate::error::{Error, Result};

/// Sampling parameters for [`synthesize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    /// Window duration, seconds.
    pub t_max: f64,
    /// Events per second emitted by each scene point.
    pub rate: f64,
    /// Standard deviation of isotropic pixel noise.
    pub noise_px: f64,
}

/// Unit bearings of `n` scene points whose `t = 0` projections are uniform
/// over the sensor, keeping `margin` pixels from the border.
pub fn random_scene<R: Rng + ?Sized>(
    n: usize,
    cam: &CameraIntrinsics,
    margin: f64,
    rng: &mut R,
) -> Vec<Vector3<f64>> {
    let hi_x = (cam.width as f64 - 1.0 - margin).max(margin);
    let hi_y = (cam.height as f64 - 1.0 - margin).max(margin);
    (0..n)
        .map(|_| {
            let u = Vector2::new(rng.random_range(margin..=hi_x), rng.random_range(margin..=hi_y));
            cam.bearing(&u).normalize()
        })
        .collect()
}

/// Generates the events a rotating camera observes from static scene points.
///
/// Each point emits `round(rate * t_max)` events (at least one) at uniform
/// random times. An event at time `t` is the projection of the point rotated
/// by `R(t; omega)^-1`, so warping it with `omega_true` returns it to the
/// point's `t = 0` projection. Events landing outside `[0, W) x [0, H)` are
/// dropped.
pub fn synthesize<R: Rng + ?Sized>(
    scene: &[Vector3<f64>],
    omega_true: Vector3<f64>,
    cam: &CameraIntrinsics,
    spec: &SynthSpec,
    rng: &mut R,
) -> Result<(EventWindow, Vector3<f64>)> {
    if !(spec.rate > 0.0 && spec.rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate must be positive, got {}", spec.rate)));
    }
    if !(spec.t_max >= 0.0 && spec.t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid duration {}", spec.t_max)));
    }
    if !(spec.noise_px >= 0.0) {
        return Err(Error::InvalidArgument("noise must be non-negative".into()));
    }
    if !omega_true.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("angular velocity must be finite".into()));
    }
    let visible = scene
        .iter()
        .filter(|b| cam.project(b).is_ok_and(|u| cam.contains_raw(&u)))
        .count();
    if visible == 0 {
        return Err(Error::SceneOffSensor);
    }

    let noise = Normal::new(0.0, spec.noise_px.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let per_point = ((spec.rate * spec.t_max).round() as usize).max(1);
    let mut events = Vec::with_capacity(per_point * scene.len());
    for bearing in scene {
        for _ in 0..per_point {
            let t = if spec.t_max > 0.0 {
                rng.random_range(0.0..=spec.t_max)
            } else {
                0.0
            };
            let rot = Rotation3::from_scaled_axis(omega_true * t);
            let ray = rot.inverse() * bearing;
            let Ok(mut u) = cam.project(&ray) else {
                continue;
            };
            if spec.noise_px > 0.0 {
                u += Vector2::new(noise.sample(rng), noise.sample(rng));
            }
            if cam.contains_raw(&u) {
                events.push(Event { u, t, p: 1 });
            }
        }
    }
    if events.is_empty() {
        return Err(Error::SceneOffSensor);
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok((EventWindow::new(events, spec.t_max, 0.0)?, omega_true))
}
