use cmbnb::events::{random_scene, synthesize, CameraIntrinsics, SynthSpec};
use cmbnb::warp::PreparedWindow;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn true_velocity_returns_events_to_their_origin() {
    let cam = CameraIntrinsics::new(200.0, 210.0, 119.5, 89.5, 240, 180).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scene = random_scene(50, &cam, 20.0, &mut rng);
    let omega = Vector3::new(0.5, -0.3, 1.0);
    let spec = SynthSpec {
        t_max: 0.05,
        rate: 200.0,
        noise_px: 0.0,
    };
    let (w, _) = synthesize(&scene, omega, &cam, &spec, &mut rng).unwrap();
    assert!(w.len() > 400);
    let origins: Vec<_> = scene.iter().map(|b| cam.project(b).unwrap()).collect();
    let pw = PreparedWindow::new(&w, &cam);
    for i in 0..pw.len() {
        let x = pw.warp(i, &omega).unwrap();
        let err = origins.iter().map(|o| (x - o).norm()).fold(f64::INFINITY, f64::min);
        assert!(err < 1e-9, "event {i} lands {err} px from its point");
    }
}
