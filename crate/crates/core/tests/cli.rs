use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swi"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulated(dir: &Path, seed: &str, out: &str) -> Output {
    let o = swi(dir, &["scene", "--kind", "relief", "--size", "32x24", "--out", "scene"]);
    assert!(o.status.success(), "{}", stderr(&o));
    swi(dir, &["simulate", "--scene", "scene/scene.json", "--mn", "4x4", "--seed", seed, "--out", out])
}

#[test]
fn simulate_reports_optics_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulated(dir.path(), "7", "frames");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("lambda_s_um: 609.180000"), "{text}");
    assert!(text.contains("unambiguous_range_um: 304.590000"));
    assert!(text.contains("frames: 16"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("frames/stack.json")).unwrap()).unwrap();
    assert!((sidecar["config"]["lambda_s"].as_f64().unwrap() - 609.18).abs() < 1e-9);
    let frames = fs::read_dir(dir.path().join("frames"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".pfm"))
        .count();
    assert_eq!(frames, 16);
    assert!(dir.path().join("frames/manifest.json").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("noisy.json"),
        r#"{"acquisition": {"noise_sigma": 0.05, "mode": "full_field_coherent"}}"#,
    )
    .unwrap();
    swi(dir.path(), &["scene", "--kind", "subsurface", "--size", "16x16", "--out", "scene"]);
    for out in ["a", "b"] {
        let o = swi(
            dir.path(),
            &["simulate", "--config", "noisy.json", "--scene", "scene/scene.json", "--seed", "7", "--out", out],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        if name == "manifest.json" {
            // identical apart from the output directory itself
            let strip = |bytes: &[u8]| {
                let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                v["config"]["out"] = serde_json::Value::Null;
                v
            };
            assert_eq!(strip(&a), strip(&b));
        } else {
            assert!(a == b, "{name:?} differs");
        }
    }
}

#[test]
fn noiseless_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulated(dir.path(), "1", "frames").status.success());
    let o = swi(dir.path(), &["reconstruct", "--frames", "frames", "--out", "rec", "--gt", "scene/depth.pfm"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rmse: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rmse_um: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rmse < 1e-3, "{text}");
    for f in ["depth.pfm", "depth.json", "mask.png", "depth.png", "manifest.json"] {
        assert!(dir.path().join("rec").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rec/manifest.json")).unwrap()).unwrap();
    assert!(manifest["results"]["colormap"]["min"].is_number());
    assert_eq!(manifest["config"]["frames"], "frames");
}

#[test]
fn bilateral_needs_guide() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulated(dir.path(), "1", "frames").status.success());
    let o = swi(dir.path(), &["reconstruct", "--frames", "frames", "--out", "rec", "--filter", "bilateral"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = swi(
        dir.path(),
        &["reconstruct", "--frames", "frames", "--out", "rec", "--filter", "bilateral", "--guide", "scene/guide.png"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn missing_frame_is_inconsistent() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulated(dir.path(), "1", "frames").status.success());
    fs::remove_file(dir.path().join("frames/frame_n3_m2.pfm")).unwrap();
    let o = swi(dir.path(), &["reconstruct", "--frames", "frames", "--out", "rec"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("frame_n3_m2.pfm"));
}

#[test]
fn missing_scene_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = swi(dir.path(), &["simulate", "--scene", "absent.json", "--out", "x"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("absent.json"));
}

#[test]
fn bad_config_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"lambda1": 780, "lambda2": 780}"#).unwrap();
    let o = swi(dir.path(), &["calibrate", "--config", "c.json", "--out", "cal"]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(dir.path().join("d.json"), r#"{"no_such_field": 1}"#).unwrap();
    let o = swi(dir.path(), &["calibrate", "--config", "d.json", "--out", "cal"]);
    assert_eq!(o.status.code(), Some(2));
    let o = swi(dir.path(), &["simulate", "--mn", "2x4", "--scene", "x.json", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn track_needs_two_offsets() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["track", "--offsets", "--out", "t"][..], &["track", "--offsets", "3", "--out", "t"]] {
        let o = swi(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    }
}

#[test]
fn calibrate_recovers_synthetic_wavelength() {
    let dir = tempfile::tempdir().unwrap();
    let o = swi(dir.path(), &["calibrate", "--out", "cal"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = fs::read_to_string(dir.path().join("cal/fit.csv")).unwrap();
    let mut rows = fit.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let values: Vec<f64> = rows.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let ls = values[header.iter().position(|h| *h == "lambda_s").unwrap()];
    assert!(((ls - 609.18) / 609.18).abs() < 1e-3);
    // the written samples calibrate to the same value
    let o = swi(dir.path(), &["calibrate", "--samples", "cal/samples.csv", "--out", "cal2"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn scan_compare_prints_factor() {
    let dir = tempfile::tempdir().unwrap();
    let o = swi(dir.path(), &["scan-compare", "--rate", "30000", "--images", "16", "--time", "1", "--width", "1600"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("factor: 37"));
    let o = swi(dir.path(), &["scan-compare", "--width", "200", "--out", "scan", "--noise", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("scan/scan.csv").exists());
}

#[test]
fn track_and_sweep_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("small.json"),
        r#"{"scene_size": [24, 24], "offsets": [0, 2], "kernel_widths": [7, 30], "shifts": [[3, 3]], "coverages": [0.5, 1.0]}"#,
    )
    .unwrap();
    let o = swi(dir.path(), &["track", "--config", "small.json", "--noise", "0.05", "--out", "track"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let acc = fs::read_to_string(dir.path().join("track/accuracy.csv")).unwrap();
    assert!(acc.starts_with("kernel_width,rmse_swept,medae_swept,rmse_coherent,medae_coherent\n"));
    assert_eq!(acc.lines().count(), 3);
    let off = fs::read_to_string(dir.path().join("track/offsets.csv")).unwrap();
    assert_eq!(off.lines().count(), 1 + 2 * 2 * 2);
    let o = swi(dir.path(), &["sweep", "--config", "small.json", "--out", "sweep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    assert!(sweep.starts_with("m,n,coverage,rmse,frames_used\n"));
    assert_eq!(sweep.lines().count(), 3);
}
