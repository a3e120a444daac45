//! Upper bounds on the contrast over a cube of angular velocities.
//!
//! Every event's warped position over a cube `B` is confined to a disc: the
//! rotated ray stays inside a cone around `R(t; omega_c) b`, and the cone
//! projects to an ellipse whose enclosing disc is used. From the discs we
//! bound the sum of squared pixel values from above and the mean pixel value
//! from below, giving `C(B) = S(B) / P - mu(B)^2`.
//!
//! For the discrete image the sum-of-squares bound comes from a relaxed
//! assignment problem over the dominant columns of the disc/component
//! incidence, solved greedily by density.

mod cone;
mod continuous;
mod discrete;
mod iqp;

use nalgebra::Vector3;
use rand::Rng;

use crate::events::{CameraIntrinsics, EventWindow};
use crate::image::{contrast, contrast_from_counts, render_continuous_prepared, render_discrete_prepared, KernelSpec};
use crate::warp::{AngularVelocity, PreparedWindow};

pub use cone::{discs_for_cube, project_cone, rotation_uncertainty, write_disc_csv, Ellipse, UncertaintyDisc};
pub use continuous::{mean_lower_continuous, pixel_upper_continuous, sos_upper_continuous, upper_image_continuous};
pub use discrete::{
    dominant_columns, intersections, mean_lower_discrete, pixel_upper_discrete, sos_upper_discrete,
    sos_upper_from_densities, Columns, DominantColumns, Intersections,
};
pub use iqp::{iqp_exact, MAX_IQP_DISCS};

/// Axis-aligned cube `[c - h, c + h]^3` in angular-velocity space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchCube {
    pub centre: AngularVelocity,
    pub half_width: f64,
}

impl SearchCube {
    pub fn new(centre: AngularVelocity, half_width: f64) -> Self {
        assert!(half_width >= 0.0, "cube half-width must be non-negative");
        Self { centre, half_width }
    }

    pub fn singleton(omega: AngularVelocity) -> Self {
        Self::new(omega, 0.0)
    }

    /// Opposite corners `omega_c - h 1` and `omega_c + h 1`.
    pub fn corners(&self) -> (AngularVelocity, AngularVelocity) {
        let d = Vector3::repeat(self.half_width);
        (self.centre - d, self.centre + d)
    }

    /// Half the length of the main diagonal, `h sqrt(3)`.
    pub fn half_diagonal(&self) -> f64 {
        self.half_width * 3f64.sqrt()
    }

    /// The eight octants, ordered by the bits `(x, y, z)` of the index.
    pub fn split(&self) -> [SearchCube; 8] {
        let h = self.half_width / 2.0;
        std::array::from_fn(|k| {
            let s = |bit: usize| if k >> bit & 1 == 1 { h } else { -h };
            SearchCube::new(self.centre + Vector3::new(s(0), s(1), s(2)), h)
        })
    }

    /// Distance from the origin to the nearest point of the cube.
    pub fn min_norm(&self) -> f64 {
        let (lo, hi) = self.corners();
        Vector3::from_fn(|i, _| 0.0f64.clamp(lo[i], hi[i])).norm()
    }

    pub fn contains(&self, omega: &AngularVelocity) -> bool {
        (omega - self.centre).amax() <= self.half_width
    }

    /// Uniform sample from the cube.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AngularVelocity {
        let h = self.half_width;
        if h == 0.0 {
            return self.centre;
        }
        self.centre + Vector3::from_fn(|_, _| rng.random_range(-h..=h))
    }
}

/// Which event image the contrast is computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Pixel counts.
    Discrete,
    /// Kernel-weighted accumulation.
    Continuous(KernelSpec),
}

/// Contrast objective and its cube upper bound for one window.
#[derive(Debug, Clone)]
pub struct ContrastBound {
    pw: PreparedWindow,
    mode: Mode,
}

impl ContrastBound {
    pub fn new(window: &EventWindow, cam: &CameraIntrinsics, mode: Mode) -> Self {
        Self {
            pw: PreparedWindow::new(window, cam),
            mode,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn prepared(&self) -> &PreparedWindow {
        &self.pw
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        self.pw.camera()
    }

    /// Contrast `C(omega)` of the mode's event image.
    pub fn objective(&self, omega: &AngularVelocity) -> f64 {
        match &self.mode {
            Mode::Discrete => contrast(&render_discrete_prepared(&self.pw, omega)),
            Mode::Continuous(k) => contrast(&render_continuous_prepared(&self.pw, omega, k)),
        }
    }

    pub fn discs(&self, cube: &SearchCube) -> Vec<UncertaintyDisc> {
        discs_for_cube(cube, &self.pw)
    }

    /// Upper bound `S(B) / P - mu(B)^2` on the contrast over `cube`.
    pub fn upper(&self, cube: &SearchCube) -> f64 {
        let discs = self.discs(cube);
        let cam = self.pw.camera();
        let p = cam.pixel_count();
        match &self.mode {
            Mode::Discrete => {
                let t = intersections(&discs, cam);
                let densities = discrete::dominant_densities(&t);
                let sos = sos_upper_from_densities(&densities, t.n_rows());
                let on_image = discrete::on_image_count(&discs) as u64;
                contrast_from_counts(p, on_image, sos)
            }
            Mode::Continuous(k) => {
                let sos = sos_upper_continuous(&discs, cam, k);
                let mu = mean_lower_continuous(&discs, cam, k);
                sos / p as f64 - mu * mu
            }
        }
    }
}

/// One-shot form of [`ContrastBound::upper`].
pub fn contrast_upper(cube: &SearchCube, window: &EventWindow, cam: &CameraIntrinsics, mode: Mode) -> f64 {
    ContrastBound::new(window, cam, mode).upper(cube)
}
