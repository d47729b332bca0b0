use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rdcr::cli::{parse_pose, read_records, write_correspondences, write_rig};
use rdcr::geometry::StereoRig;
use rdcr::metrics::relative_error;
use rdcr::synthgen::{generate_scene, CorruptionConfig};

fn rdcr_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdcr"))
        .args(args)
        .env("RDCR_THREADS", "2")
        .output()
        .unwrap()
}

fn write_rig_file(dir: &Path) -> String {
    let path = dir.join("rig.txt");
    write_rig(fs::File::create(&path).unwrap(), &StereoRig::kitti_00()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn estimate_prints_pose() {
    let dir = tempfile::tempdir().unwrap();
    let rig = StereoRig::kitti_00();
    let scene = generate_scene(&rig, &CorruptionConfig::new(300, 0.2, 0.5, 1)).unwrap();
    let matches = dir.path().join("pair.txt");
    write_correspondences(fs::File::create(&matches).unwrap(), &scene.matches_corrupt).unwrap();
    let rig_path = write_rig_file(dir.path());

    for method in ["rdcr", "apg", "ransac", "cls"] {
        let out = rdcr_bin(&["estimate", "--matches", matches.to_str().unwrap(), "--rig", &rig_path, "--method", method]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8(out.stdout).unwrap();
        let first = stdout.lines().next().unwrap();
        assert_eq!(first.split_whitespace().count(), 12);
        let pose = parse_pose(first, "stdout", 1).unwrap();
        if method == "rdcr" || method == "ransac" {
            assert!(relative_error(&pose, &scene.motion_true).unwrap() < 0.05, "{method}");
        }
    }
}

#[test]
fn errors_exit_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let rig_path = write_rig_file(dir.path());
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 2 3 4 5 6 7 8\n1 2\n").unwrap();
    let out = rdcr_bin(&["estimate", "--matches", bad.to_str().unwrap(), "--rig", &rig_path]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    let out = rdcr_bin(&["estimate", "--matches", "/nonexistent", "--rig", &rig_path]);
    assert!(!out.status.success());

    let out = rdcr_bin(&["estimate", "--matches", bad.to_str().unwrap(), "--rig", &rig_path, "--method", "lmeds"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    let out = rdcr_bin(&["frobnicate"]);
    assert!(!out.status.success());
}

#[test]
fn sweep_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "n_matches_grid = [100]\noutlier_fraction_grid = [0.1, 0.3]\nrepetitions = 2\nbase_seed = 11\nmethods = [\"rdcr\", \"apg\", \"ransac\", \"cls\"]\n",
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out_dir = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_rdcr"))
            .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
            .env("RDCR_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a", "1");
    let b = run("b", "4");
    for f in ["sweep.csv", "aggregate.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rows = read_records(&a.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 16);
    let agg = fs::read_to_string(a.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 8);
    assert_eq!(fs::read_to_string(a.join("timings.csv")).unwrap().lines().count(), 17);
}

#[test]
fn sweep_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, "n_matches_grid = []\noutlier_fraction_grid = [0.1]\n").unwrap();
    let out = rdcr_bin(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonempty"));
}

#[test]
fn sequence_writes_kitti_lines() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs");
    fs::create_dir(&pairs).unwrap();
    let rig = StereoRig::kitti_00();
    for k in 0..3 {
        let scene = generate_scene(&rig, &CorruptionConfig::new(200, 0.1, 0.5, k)).unwrap();
        write_correspondences(fs::File::create(pairs.join(format!("{k:02}.txt"))).unwrap(), &scene.matches_corrupt).unwrap();
    }
    let rig_path = write_rig_file(dir.path());
    let traj = dir.path().join("poses.txt");
    let out = rdcr_bin(&["sequence", "--dir", pairs.to_str().unwrap(), "--rig", &rig_path, "--out", traj.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&traj).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "1.000000000e+00 0.000000000e+00 0.000000000e+00 0.000000000e+00 0.000000000e+00 1.000000000e+00 \
         0.000000000e+00 0.000000000e+00 0.000000000e+00 0.000000000e+00 1.000000000e+00 0.000000000e+00"
    );
    for l in &lines {
        assert_eq!(l.split(' ').count(), 12);
    }

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let traj = dir.path().join("empty.txt");
    let out = rdcr_bin(&["sequence", "--dir", empty.to_str().unwrap(), "--rig", &rig_path, "--out", traj.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&traj).unwrap(), "");
    assert!(String::from_utf8_lossy(&out.stderr).contains("no correspondence files"));
}
