//! Constant-angular-velocity rotation model and the event warp to `t = 0`.

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};

use crate::error::Result;
use crate::events::{CameraIntrinsics, EventWindow};

/// Angular velocity `omega`: rotation axis times rate, rad/s.
pub type AngularVelocity = Vector3<f64>;

/// Below this angle Rodrigues' formula is replaced by its Taylor expansion.
const SMALL_ANGLE: f64 = 1e-9;

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Exponential map from an axis-angle vector to a rotation (Rodrigues).
pub fn exp_map(axis_angle: &Vector3<f64>) -> Rotation3<f64> {
    let theta = axis_angle.norm();
    let k = skew(axis_angle);
    let m = if theta < SMALL_ANGLE {
        Matrix3::identity() + k + k * k * 0.5
    } else {
        let (s, c) = theta.sin_cos();
        Matrix3::identity() + k * (s / theta) + k * k * ((1.0 - c) / (theta * theta))
    };
    Rotation3::from_matrix_unchecked(m)
}

/// `R(t; omega) = exp([omega t]x)`.
pub fn rotation_at(omega: &AngularVelocity, t: f64) -> Rotation3<f64> {
    exp_map(&(omega * t))
}

/// Rotated unit bearing `R(t; omega) K^-1 [u; 1] / |.|`.
pub fn warp_ray(
    u: &Vector2<f64>,
    t: f64,
    omega: &AngularVelocity,
    cam: &CameraIntrinsics,
) -> Vector3<f64> {
    (rotation_at(omega, t) * cam.bearing(u)).normalize()
}

/// Warps an event observed at `u`, time `t` back to the `t = 0` image plane:
/// `K^(1:2) R b / K^(3) R b` with `b = K^-1 [u; 1]`.
///
/// Fails with [`crate::Error::BehindCamera`] when the rotated ray no longer
/// points in front of the camera. The result may lie outside the sensor.
pub fn warp_event(
    u: &Vector2<f64>,
    t: f64,
    omega: &AngularVelocity,
    cam: &CameraIntrinsics,
) -> Result<Vector2<f64>> {
    cam.project(&(rotation_at(omega, t) * cam.bearing(u)))
}

/// A window with its event bearings precomputed, so repeated warps under
/// different `omega` skip the back-projection.
#[derive(Debug, Clone)]
pub struct PreparedWindow {
    cam: CameraIntrinsics,
    bearings: Vec<Vector3<f64>>,
    times: Vec<f64>,
}

impl PreparedWindow {
    pub fn new(window: &EventWindow, cam: &CameraIntrinsics) -> Self {
        let (bearings, times) = window
            .events()
            .iter()
            .map(|e| (cam.bearing(&e.u), e.t))
            .unzip();
        Self {
            cam: *cam,
            bearings,
            times,
        }
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        &self.cam
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Un-normalised bearing `K^-1 [u_i; 1]`.
    pub fn bearing(&self, i: usize) -> &Vector3<f64> {
        &self.bearings[i]
    }

    /// `R(t_i; omega) K^-1 [u_i; 1]`.
    pub fn rotated(&self, i: usize, omega: &AngularVelocity) -> Vector3<f64> {
        rotation_at(omega, self.times[i]) * self.bearings[i]
    }

    /// Warped position of event `i`, `None` when it falls behind the camera.
    pub fn warp(&self, i: usize, omega: &AngularVelocity) -> Option<Vector2<f64>> {
        self.cam.project(&self.rotated(i, omega)).ok()
    }

    pub fn warp_all(&self, omega: &AngularVelocity) -> impl Iterator<Item = Option<Vector2<f64>>> + '_ {
        let omega = *omega;
        (0..self.len()).map(move |i| self.warp(i, &omega))
    }
}
