//! The public API end to end on a tiny problem: simulate, optimize, score.

use blurev_core::eval::trajectory_error;
use blurev_core::field::Activation;
use blurev_core::lie::{compose, se3_exp};
use blurev_core::metrics::psnr;
use blurev_core::sim::{simulate, GroundTruthScene, MotionSpec, SimSettings};
use blurev_core::spline::{SplineTrajectory, Trajectory};
use blurev_core::train::{OptimizationState, Observations, TrainConfig};
use blurev_core::{CameraIntrinsics, FieldArch, RenderSettings, RigidTransform, Twist};

fn problem() -> (Observations, TrainConfig, SplineTrajectory) {
    let k = CameraIntrinsics::new(12.0, 12.0, 6.0, 6.0, 12, 12).unwrap();
    let scene = GroundTruthScene::textured_plane(4.0, 3);
    let traj = MotionSpec::random(4.0, 0.15, 5).trajectory().unwrap();
    let data = simulate(&scene, &traj, &k, &SimSettings { frames: 50, n_gt: 11, ..SimSettings::default() }).unwrap();
    let obs = Observations::new(data.blur.blurry, data.events, k).unwrap();
    let config = TrainConfig {
        iterations: 12,
        n_virtual: 4,
        color_batch: 24,
        event_batch: 24,
        lr_field: 1e-2,
        render: RenderSettings { n_samples: 4, near: 3.0, far: 5.0, ..RenderSettings::default() },
        arch: FieldArch { hidden_width: 16, hidden_layers: 1, activation: Activation::Relu, view_dependent: false, ..FieldArch::default() },
        ..TrainConfig::default()
    };
    (obs, config, traj)
}

#[test]
fn optimization_is_deterministic_and_renders() {
    let (obs, config, _) = problem();
    let mut a = OptimizationState::new(&config).unwrap();
    let mut b = OptimizationState::new(&config).unwrap();
    let mut skipped = 0;
    for _ in 0..config.iterations {
        let ra = a.step(&obs, &config).unwrap();
        assert_eq!(ra, b.step(&obs, &config).unwrap());
        assert!(ra.loss.is_finite() && ra.loss >= ra.photometric);
        skipped += ra.event_skipped as u64;
    }
    assert_eq!(a, b);
    assert_eq!(a.step, 12);
    assert_eq!(a.skipped_event_terms, skipped);
    let k = obs.intrinsics;
    let img = a.render_at(0.5, &k, &config.render).unwrap();
    assert_eq!(img, b.render_at(0.5, &k, &config.render).unwrap());
    assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(psnr(&img, &obs.blurry).unwrap().is_finite());
    assert!(a.render_at(1.2, &k, &config.render).is_err());
}

#[test]
fn gauge_alignment_removes_similarity() {
    let (_, _, gt) = problem();
    let g = se3_exp(&Twist::new([0.3, -0.2, 0.5], [1.0, -2.0, 0.5]));
    let scale = 2.5;
    let knots: Vec<RigidTransform> = (0..4)
        .map(|i| {
            let p = gt.pose_at(i as f64 / 3.0).unwrap();
            let mut moved = compose(&g, &p);
            moved.translation = moved.translation.map(|c| c * scale);
            moved
        })
        .collect();
    let reference = SplineTrajectory::over_unit_interval((0..4).map(|i| gt.pose_at(i as f64 / 3.0).unwrap()).collect()).unwrap();
    let estimate = SplineTrajectory::over_unit_interval(knots).unwrap();
    let e = trajectory_error(&estimate, &reference, 31).unwrap();
    assert!(e.rotation_rmse_deg() < 1e-6, "{}", e.rotation_rmse_deg());
    assert!(e.translation_rmse() < 1e-6, "{}", e.translation_rmse());
    assert!((e.alignment.scale - 1.0 / scale).abs() < 1e-6);
}
