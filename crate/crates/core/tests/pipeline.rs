use rdcr::estimator::{estimate_motion, estimate_with, Method, PipelineConfig};
use rdcr::geometry::StereoRig;
use rdcr::metrics::{detection_stats, relative_error};
use rdcr::synthgen::{generate_scene, CorruptionConfig};

#[test]
fn outliers_hurt_plain_least_squares_more_than_rdcr() {
    let rig = StereoRig::kitti_00();
    let mut wins = 0;
    for seed in 0..10 {
        let scene = generate_scene(&rig, &CorruptionConfig::new(500, 0.3, 1.0, seed)).unwrap();
        let cfg = PipelineConfig::default();
        let robust = estimate_motion(&scene.matches_corrupt, &rig, &cfg).unwrap();
        let plain = estimate_with(Method::Cls, &scene.matches_corrupt, &rig, &cfg).unwrap();
        let e_r = relative_error(&robust.motion, &scene.motion_true).unwrap();
        let e_p = relative_error(&plain.motion, &scene.motion_true).unwrap();
        if e_r < e_p {
            wins += 1;
        }
    }
    assert!(wins >= 8, "{wins}");
}

#[test]
fn ransac_recovers_clean_scene() {
    let rig = StereoRig::kitti_00();
    let scene = generate_scene(&rig, &CorruptionConfig::new(200, 0.0, 0.0, 3)).unwrap();
    let est = estimate_with(Method::Ransac, &scene.matches_corrupt, &rig, &PipelineConfig::default()).unwrap();
    assert!(relative_error(&est.motion, &scene.motion_true).unwrap() < 1e-4);
    assert_eq!(est.mask.n_outliers(), 0);
}

#[test]
fn detection_flags_mostly_true_outliers() {
    let rig = StereoRig::kitti_00();
    let scene = generate_scene(&rig, &CorruptionConfig::new(1000, 0.3, 1.5, 4)).unwrap();
    let est = estimate_motion(&scene.matches_corrupt, &rig, &PipelineConfig::default()).unwrap();
    let stats = detection_stats(&est.mask, &scene.outlier_truth).unwrap();
    assert!(stats.accuracy > 0.8, "{stats:?}");
    assert_eq!(stats.total(), 1000);
}

#[test]
fn estimation_is_bit_reproducible() {
    let rig = StereoRig::kitti_00();
    let scene = generate_scene(&rig, &CorruptionConfig::new(400, 0.4, 1.5, 5)).unwrap();
    for m in Method::ALL {
        let a = estimate_with(m, &scene.matches_corrupt, &rig, &PipelineConfig::default()).unwrap();
        let b = estimate_with(m, &scene.matches_corrupt, &rig, &PipelineConfig::default()).unwrap();
        assert_eq!(a.motion, b.motion);
        assert_eq!(a.mask, b.mask);
    }
}

#[test]
fn rdcr_beats_unfiltered_fit_on_paired_scenes() {
    let rig = StereoRig::kitti_00();
    let cfg = PipelineConfig::default();
    let mut wins = 0;
    for seed in 0..50 {
        let scene = generate_scene(&rig, &CorruptionConfig::new(1000, 0.3, 1.5, 500 + seed)).unwrap();
        let robust = estimate_motion(&scene.matches_corrupt, &rig, &cfg).unwrap();
        let plain = estimate_with(Method::Cls, &scene.matches_corrupt, &rig, &cfg).unwrap();
        if relative_error(&robust.motion, &scene.motion_true).unwrap() < relative_error(&plain.motion, &scene.motion_true).unwrap() {
            wins += 1;
        }
    }
    assert!(wins >= 45, "{wins}/50");
}

#[test]
fn ransac_consensus_is_precise_at_half_outliers() {
    let rig = StereoRig::kitti_00();
    let cfg = PipelineConfig::default();
    let mut good = 0;
    for seed in 0..50 {
        let scene = generate_scene(&rig, &CorruptionConfig::new(1000, 0.5, 1.5, 700 + seed)).unwrap();
        let est = estimate_with(Method::Ransac, &scene.matches_corrupt, &rig, &cfg).unwrap();
        let kept: Vec<usize> = est.mask.inlier_indices().collect();
        let true_kept = kept.iter().filter(|&&j| !scene.outlier_truth[j]).count();
        if true_kept as f64 / kept.len() as f64 > 0.9 {
            good += 1;
        }
    }
    assert!(good >= 45, "{good}/50");
}
