//! Bounds for the kernel-weighted (continuous) event image.

use nalgebra::Vector2;

use super::cone::UncertaintyDisc;
use crate::events::CameraIntrinsics;
use crate::image::{clamp_range, EventImage, KernelSpec};

/// `sum_i delta(max(|x_j - c_i| - rho_i, 0))`: the kernel evaluated at the
/// distance from `x_j` to each disc.
pub fn pixel_upper_continuous(x: &Vector2<f64>, discs: &[UncertaintyDisc], kernel: &KernelSpec) -> f64 {
    discs
        .iter()
        .map(|d| {
            if !d.valid {
                return kernel.eval(0.0);
            }
            kernel.eval(((x - d.centre).norm() - d.radius).max(0.0))
        })
        .sum()
}

/// Pixel upper-bound image over the whole sensor.
pub fn upper_image_continuous(discs: &[UncertaintyDisc], cam: &CameraIntrinsics, kernel: &KernelSpec) -> EventImage {
    let mut values = vec![0.0; cam.pixel_count()];
    let reach = kernel.radius();
    for d in discs {
        if !d.valid {
            let k0 = kernel.eval(0.0);
            values.iter_mut().for_each(|v| *v += k0);
            continue;
        }
        let r = d.radius + reach;
        let (c0, c1) = clamp_range(d.centre.x - r, d.centre.x + r, cam.width);
        let (r0, r1) = clamp_range(d.centre.y - r, d.centre.y + r, cam.height);
        for row in r0..r1 {
            let dy = row as f64 - d.centre.y;
            for col in c0..c1 {
                let dx = col as f64 - d.centre.x;
                let dist = ((dx * dx + dy * dy).sqrt() - d.radius).max(0.0);
                values[row * cam.width + col] += kernel.eval(dist);
            }
        }
    }
    EventImage::from_values(cam.width, cam.height, values)
}

/// Upper bound on the sum of squared pixel values of the continuous image.
pub fn sos_upper_continuous(discs: &[UncertaintyDisc], cam: &CameraIntrinsics, kernel: &KernelSpec) -> f64 {
    upper_image_continuous(discs, cam, kernel).sum_of_squares()
}

/// Lower bound on the mean pixel value: each disc contributes the kernel at
/// the farthest distance from `x_j` to the disc.
pub fn mean_lower_continuous(discs: &[UncertaintyDisc], cam: &CameraIntrinsics, kernel: &KernelSpec) -> f64 {
    let reach = kernel.radius();
    let mut total = 0.0;
    for d in discs.iter().filter(|d| d.valid) {
        let r = reach - d.radius;
        if r < 0.0 {
            continue;
        }
        let (c0, c1) = clamp_range(d.centre.x - r, d.centre.x + r, cam.width);
        let (r0, r1) = clamp_range(d.centre.y - r, d.centre.y + r, cam.height);
        for row in r0..r1 {
            let dy = row as f64 - d.centre.y;
            for col in c0..c1 {
                let dx = col as f64 - d.centre.x;
                total += kernel.eval((dx * dx + dy * dy).sqrt() + d.radius);
            }
        }
    }
    total / cam.pixel_count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::cone::Ellipse;

    fn disc(x: f64, y: f64, r: f64) -> UncertaintyDisc {
        let centre = Vector2::new(x, y);
        UncertaintyDisc {
            centre,
            radius: r,
            ellipse: Ellipse {
                centre,
                semi_major: r,
                semi_minor: r,
                major_dir: Vector2::x(),
            },
            on_image: true,
            valid: true,
        }
    }

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(10.0, 10.0, 4.5, 4.5, 10, 10).unwrap()
    }

    #[test]
    fn inside_every_disc_gives_n() {
        let k = KernelSpec::default();
        let discs = [disc(3.0, 3.0, 2.0), disc(4.0, 3.5, 1.5), disc(2.5, 2.5, 1.0)];
        assert_eq!(pixel_upper_continuous(&Vector2::new(3.0, 3.0), &discs, &k), 3.0);
    }

    #[test]
    fn off_image_discs_contribute_nothing() {
        let k = KernelSpec::default();
        let discs = [disc(-40.0, 3.0, 2.0), disc(80.0, 90.0, 5.0)];
        assert_eq!(sos_upper_continuous(&discs, &cam(), &k), 0.0);
        assert_eq!(mean_lower_continuous(&discs, &cam(), &k), 0.0);
    }

    #[test]
    fn grid_matches_pointwise_formula() {
        let k = KernelSpec::default();
        let c = cam();
        let discs = [disc(3.2, 3.7, 1.3), disc(8.0, 1.0, 0.2), disc(5.0, 5.0, 0.0)];
        let img = upper_image_continuous(&discs, &c, &k);
        for j in 0..c.pixel_count() {
            let direct = pixel_upper_continuous(&c.pixel_centre(j), &discs, &k);
            assert!((img.value(j) - direct).abs() < 1e-12);
        }
        let mean: f64 = (0..c.pixel_count())
            .map(|j| {
                discs
                    .iter()
                    .map(|d| k.eval((c.pixel_centre(j) - d.centre).norm() + d.radius))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / c.pixel_count() as f64;
        assert!((mean_lower_continuous(&discs, &c, &k) - mean).abs() < 1e-12);
    }
}
