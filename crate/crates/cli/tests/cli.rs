//! Black-box tests of the `mrpi` binary: artifact layout, determinism,
//! config handling and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mrpi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mrpi"))
}

fn disk_png(dir: &Path, size: u32) -> PathBuf {
    let c = (size as f64 - 1.0) / 2.0;
    let radius = size as f64 * 0.3;
    let img = image::GrayImage::from_fn(size, size, |x, y| {
        let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
        let t = (r - radius).clamp(-0.5, 0.5) + 0.5;
        image::Luma([(40.0 + 180.0 * t).round() as u8])
    });
    let path = dir.join("disk.png");
    img.save(&path).unwrap();
    path
}

fn truth_png(dir: &Path, size: u32) -> PathBuf {
    let c = (size as f64 - 1.0) / 2.0;
    let radius = size as f64 * 0.3;
    let img = image::GrayImage::from_fn(size, size, |x, y| {
        let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
        image::Luma([if (r - radius).abs() <= 0.5 { 255 } else { 0 }])
    });
    let path = dir.join("truth.png");
    img.save(&path).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn segment_writes_edges_manifest_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let out = dir.path().join("out");
    run_ok(mrpi().arg("segment").arg(&input).args(["--runs", "3", "-o"]).arg(&out));

    assert!(out.join("edges.png").exists());
    assert!(out.join("timings.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "segment");
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["config"]["runs"], 3);
    assert!(manifest["artifacts"]["edges"].is_string());
}

#[test]
fn segment_is_deterministic_for_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let mut bytes = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        run_ok(mrpi()
            .arg("segment")
            .arg(&input)
            .args(["--runs", "4", "--seed", "9", "-o"])
            .arg(&out));
        bytes.push(std::fs::read(out.join("edges.png")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn truth_enables_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let truth = truth_png(dir.path(), 64);
    let out = dir.path().join("out");
    run_ok(mrpi()
        .arg("segment")
        .arg(&input)
        .arg("--truth")
        .arg(&truth)
        .args(["--runs", "3", "-o"])
        .arg(&out));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap())
            .unwrap();
    assert!(metrics["f1"].as_f64().unwrap() >= 0.0);
}

#[test]
fn debug_stages_writes_every_intermediate() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let out = dir.path().join("out");
    run_ok(mrpi()
        .arg("segment")
        .arg(&input)
        .args(["--runs", "3", "--debug-stages", "-o"])
        .arg(&out));
    for stage in ["phi_bar.png", "normalized.png", "thresholded.png", "smoothed.png", "thinned.png"]
    {
        assert!(out.join(stage).exists(), "{stage} missing");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "runs = 2\nseed = 4\n# comment\n").unwrap();
    let out = dir.path().join("out");
    run_ok(mrpi()
        .arg("segment")
        .arg(&input)
        .arg("--config")
        .arg(&config)
        .args(["--runs", "5", "-o"])
        .arg(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["runs"], 5); // flag wins
    assert_eq!(manifest["config"]["seed"], 4); // file fills the rest
}

#[test]
fn canny_writes_edge_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let out = dir.path().join("out");
    run_ok(mrpi().arg("canny").arg(&input).arg("-o").arg(&out));
    assert!(out.join("canny.png").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn compare_writes_montage_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let truth = truth_png(dir.path(), 64);
    let out = dir.path().join("out");
    run_ok(mrpi()
        .arg("compare")
        .arg(&input)
        .arg("--truth")
        .arg(&truth)
        .args(["--runs", "3", "-o"])
        .arg(&out));
    assert!(out.join("montage.png").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(report["agreement"].as_f64().is_some());
    assert!(report["rpi_vs_truth"]["f1"].as_f64().is_some());
}

#[test]
fn missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = mrpi()
        .arg("segment")
        .arg(dir.path().join("nope.png"))
        .arg("-o")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn invalid_canny_thresholds_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let out = mrpi()
        .arg("canny")
        .arg(&input)
        .args(["--t-low", "0.5", "--t-high", "0.2"])
        .arg("-o")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_high"));
}

#[test]
fn mismatched_truth_dimensions_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = disk_png(dir.path(), 64);
    let truth = truth_png(dir.path(), 32);
    let status = mrpi()
        .arg("segment")
        .arg(&input)
        .arg("--truth")
        .arg(&truth)
        .args(["--runs", "2", "-o"])
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
