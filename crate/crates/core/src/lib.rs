//! Rotational motion estimation from event-camera streams by contrast
//! maximisation.
//!
//! The crate provides the constant-angular-velocity warp, event-image
//! formation, bounding functions over axis-aligned cubes of angular velocity,
//! and a best-first branch-and-bound solver that returns a certified global
//! optimum. Local ascent baselines and a brute-force grid oracle are included
//! for comparison and verification.
//!
//! ```
//! use cmbnb::events::{self, CameraIntrinsics};
//! use cmbnb::solvers::{solve_bnb, SolverConfig};
//! use nalgebra::Vector3;
//! use rand::SeedableRng;
//!
//! let cam = CameraIntrinsics::new(40.0, 40.0, 15.5, 15.5, 32, 32).unwrap();
//! let mut rng = rand::rngs::StdRng::seed_from_u64(1);
//! let scene = events::random_scene(10, &cam, 2.0, &mut rng);
//! let spec = events::SynthSpec { t_max: 0.02, rate: 500.0, noise_px: 0.0 };
//! let (window, _) =
//!     events::synthesize(&scene, Vector3::new(0.3, -0.2, 0.5), &cam, &spec, &mut rng).unwrap();
//! let result = solve_bnb(&window, &cam, &SolverConfig::discrete(1.0)).unwrap();
//! assert!(result.certified);
//! ```

pub mod bounds;
pub mod error;
pub mod events;
pub mod image;
pub mod solvers;
pub mod warp;

pub use error::{Error, Result};
