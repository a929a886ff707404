use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array2;
use s4tok_core::io::{read_partition, read_tokens, write_feature_matrix};
use s4tok_core::tokenizer::baseline_tokenize;
use serde_json::Value;

fn s4tok(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s4tok")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = s4tok(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, scene: &str, points: usize) -> PathBuf {
    let path = dir.join(format!("{scene}.ply"));
    ok_json(&["synth", "--scene", scene, "--points", &points.to_string(), "--out", p(&path)]);
    path
}

fn features(path: &Path, rows: usize, cols: usize, seed: u64) {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let m = Array2::from_shape_fn((rows, cols), |_| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    write_feature_matrix(path, m.view()).unwrap();
}

#[test]
fn two_plane_segmentation_has_two_dominant_superpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth(dir.path(), "perpendicular-planes", 4000);
    let part = dir.path().join("planes.part");
    let report = ok_json(&["segment", p(&cloud), "--out", p(&part)]);
    let partition = read_partition(&part).unwrap();
    assert_eq!(report["superpoints"].as_u64().unwrap() as usize, partition.count());
    let mut sizes = partition.sizes().to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let top2 = sizes[0] + sizes.get(1).copied().unwrap_or(0);
    assert!(top2 as f64 >= 0.95 * 4000.0, "sizes {sizes:?}");
    let trace: Vec<f64> = report["energy_trace"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn ball_spt_tokens_are_pure_on_two_planes() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth(dir.path(), "perpendicular-planes", 3000);
    let labels = cloud.with_extension("labels");
    let tokens = dir.path().join("t.json");
    let report = ok_json(&[
        "tokenize", p(&cloud), "--partition", p(&labels), "--mode", "ball+spt", "--out", p(&tokens),
    ]);
    assert_eq!(report["purity"].as_f64().unwrap(), 1.0);
    assert_eq!(report["boundary_crossing"].as_f64().unwrap(), 0.0);
    assert!(report["size_histogram"].is_object());
    assert!(report["singleton_count"].is_u64());
}

#[test]
fn plain_settings_reproduce_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let cloud_path = synth(dir.path(), "indoor", 2000);
    let labels = cloud_path.with_extension("labels");
    let tokens = dir.path().join("t.json");
    ok_json(&[
        "--seed", "3", "tokenize", p(&cloud_path), "--partition", p(&labels), "--mode", "knn", "--gamma", "0",
        "--no-normalize", "--tokens", "48", "--cap", "16", "--out", p(&tokens),
    ]);
    let out = read_tokens(&tokens).unwrap();
    let cloud = s4tok_core::io::read_ply(&cloud_path).unwrap();
    let baseline = baseline_tokenize(&cloud, 48, 16, out.centroid_indices[0]).unwrap();
    let got: Vec<Vec<usize>> = out.patches.iter().map(|p| p.members.clone()).collect();
    assert_eq!(got, baseline);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = s4tok(&["segment", "/no/such/cloud.ply"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/cloud.ply"));

    assert_eq!(s4tok(&["segment"]).status.code(), Some(2));
    assert_eq!(s4tok(&["frobnicate"]).status.code(), Some(2));

    let cloud = synth(dir.path(), "indoor", 500);
    let tokens = dir.path().join("t.json");
    let too_many = s4tok(&["tokenize", p(&cloud), "--segment", "--tokens", "501", "--out", p(&tokens)]);
    assert_eq!(too_many.status.code(), Some(2));
    let bad_mode = s4tok(&["tokenize", p(&cloud), "--segment", "--mode", "cube", "--out", p(&tokens)]);
    assert_eq!(bad_mode.status.code(), Some(2));

    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"tokenizer": {"n_tokens": 8, "bogus": 1}}"#).unwrap();
    let bad_config = s4tok(&["--config", p(&config), "segment", p(&cloud)]);
    assert_eq!(bad_config.status.code(), Some(2));

    let garbage = dir.path().join("garbage.ply");
    std::fs::write(&garbage, b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nend_header\n1\n").unwrap();
    assert_eq!(s4tok(&["segment", p(&garbage)]).status.code(), Some(2));

    // an all-zero distillation target has no direction
    ok_json(&["tokenize", p(&cloud), "--segment", "--tokens", "16", "--out", p(&tokens)]);
    let zeros = dir.path().join("zeros.s4f");
    let teacher = dir.path().join("teacher.s4f");
    write_feature_matrix(&zeros, Array2::<f64>::zeros((16, 6)).view()).unwrap();
    features(&teacher, 16, 6, 8);
    let numerical = s4tok(&["losses", "--tokens", p(&tokens), "--teacher", p(&teacher), "--target", p(&zeros)]);
    assert_eq!(numerical.status.code(), Some(3), "{}", String::from_utf8_lossy(&numerical.stderr));
}

#[test]
fn losses_report() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth(dir.path(), "indoor", 2000);
    let tokens = dir.path().join("t.json");
    ok_json(&["tokenize", p(&cloud), "--segment", "--tokens", "40", "--out", p(&tokens)]);
    let teacher = dir.path().join("teacher.s4f");
    let target = dir.path().join("target.s4f");
    let narrow = dir.path().join("narrow.s4f");
    features(&teacher, 40, 12, 1);
    features(&target, 40, 12, 2);
    features(&narrow, 40, 5, 3);
    let args = ["losses", "--tokens", p(&tokens), "--teacher", p(&teacher), "--target", p(&target)];

    let report = ok_json(&args);
    assert_eq!(report["lambda_l"].as_f64(), Some(0.5));
    assert_eq!(report["lambda_g"].as_f64(), Some(0.5));
    assert_eq!(report["masked"].as_u64(), Some(24));
    let total = report["assign"].as_f64().unwrap()
        + 0.5 * report["distill_local"].as_f64().unwrap()
        + 0.5 * report["distill_global"].as_f64().unwrap();
    assert!((report["total"].as_f64().unwrap() - total).abs() < 1e-12);

    let first = s4tok(&args);
    let second = s4tok(&args);
    assert_eq!(first.stdout, second.stdout);

    let own = ok_json(&["losses", "--tokens", p(&tokens), "--teacher", p(&teacher), "--target", p(&teacher)]);
    assert!(own["distill_local"].as_f64().unwrap().abs() < 1e-12);
    assert!(own["distill_global"].as_f64().unwrap().abs() < 1e-12);

    let config = dir.path().join("nomask.json");
    std::fs::write(&config, r#"{"losses": {"mask_ratio": 0.0}}"#).unwrap();
    let unmasked = s4tok(&["--config", p(&config), "losses", "--tokens", p(&tokens), "--teacher", p(&teacher), "--target", p(&target)]);
    assert!(unmasked.status.success());
    let v: Value = serde_json::from_slice(&unmasked.stdout).unwrap();
    assert_eq!(v["assign"].as_f64(), Some(0.0));
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
    assert!(String::from_utf8_lossy(&unmasked.stderr).contains("warning"));

    let mismatch = s4tok(&["losses", "--tokens", p(&tokens), "--teacher", p(&teacher), "--target", p(&narrow)]);
    assert_eq!(mismatch.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&mismatch.stderr);
    assert!(msg.contains("40x5") && msg.contains("40x12"), "{msg}");
}

#[test]
fn propagate_and_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth(dir.path(), "indoor", 2000);
    let part = dir.path().join("s.part");
    let tokens = dir.path().join("t.json");
    ok_json(&["segment", p(&cloud), "--out", p(&part)]);
    ok_json(&["tokenize", p(&cloud), "--partition", p(&part), "--tokens", "32", "--out", p(&tokens)]);
    let feats = dir.path().join("f.s4f");
    features(&feats, 32, 8, 4);
    let point_feats = dir.path().join("pf.s4f");
    let pooled = dir.path().join("pool.s4f");
    let report = ok_json(&[
        "propagate", p(&cloud), "--tokens", p(&tokens), "--partition", p(&part), "--features", p(&feats), "--out",
        p(&point_feats), "--pooled", p(&pooled),
    ]);
    assert_eq!(report["points"].as_u64(), Some(2000));
    let pf = s4tok_core::io::read_feature_matrix(&point_feats).unwrap();
    assert_eq!(pf.dim(), (2000, 8));
    let pooled = s4tok_core::io::read_feature_matrix(&pooled).unwrap();
    assert_eq!(pooled.nrows(), read_partition(&part).unwrap().count());

    let gamma = dir.path().join("gamma.s4f");
    let report = ok_json(&["cluster", "--tokens", p(&tokens), "--features", p(&feats), "--out", p(&gamma)]);
    let g = s4tok_core::io::read_feature_matrix(&gamma).unwrap();
    assert_eq!(g.nrows(), 32);
    assert_eq!(report["clusters"].as_u64().unwrap() as usize, g.ncols());
    for row in g.rows() {
        assert!((row.sum() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn bench_report_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let report = ok_json(&["--seed", "1", "bench", "--synthetic", "--points", "1500", "--tokens", "32", "--out", p(&out)]);
    let variants = report["variants"].as_array().unwrap();
    assert_eq!(variants.len(), 2 * 4 * 2);
    for v in variants {
        let agreement = v["agreement"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&agreement));
        if v["normalize"].as_bool().unwrap() && v["mode"] == "ball+spt" {
            assert_eq!(agreement, 1.0);
        }
        if v["mode"] == "knn" {
            assert_eq!(agreement, 1.0);
        }
        for s in v["scales"].as_array().unwrap() {
            let purity = s["purity"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&purity));
        }
    }
    let timings: Value = serde_json::from_slice(&std::fs::read(out.with_extension("timings.json")).unwrap()).unwrap();
    for scene in timings.as_array().unwrap() {
        for t in scene["segment_seconds"].as_array().unwrap() {
            assert!(t.as_f64().unwrap() > 0.0);
        }
    }

    let single = ok_json(&["bench", "--synthetic", "--points", "800", "--tokens", "16", "--scales", "1"]);
    for v in single["variants"].as_array().unwrap() {
        assert_eq!(v["agreement"].as_f64(), Some(1.0));
    }
}
