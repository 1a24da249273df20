use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use extrseg_core::raster::{BinaryMask, RasterImage};

fn seg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seg")).args(args).output().unwrap()
}

fn write_blob(path: &Path) {
    // bright disk of radius 12 centred at (16, 22) on a dark ground
    let px: Vec<[f64; 3]> = (0..40 * 44)
        .map(|i| {
            let (x, y) = ((i % 40) as f64, (i / 40) as f64);
            if (x - 16.0).hypot(y - 22.0) <= 12.0 {
                [240.0, 210.0, 60.0]
            } else {
                [40.0, 50.0, 90.0]
            }
        })
        .collect();
    fs::write(path, RasterImage::new(40, 44, px).unwrap().encode_png().unwrap()).unwrap();
}

#[test]
fn segment_writes_a_binary_mask() {
    let dir = tempfile::tempdir().unwrap();
    let (img, out) = (dir.path().join("a.png"), dir.path().join("m.png"));
    write_blob(&img);
    let o = seg(&[
        "segment",
        "--image",
        img.to_str().unwrap(),
        "--points",
        "16,10;16,34;4,22;28,22",
        "--mode",
        "extr",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mask = BinaryMask::decode_png(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(mask.dims(), (40, 44));
    assert!(mask.get(16, 22) && !mask.get(0, 0));
    let gray = extrseg_core::raster::decode_image(&fs::read(&out).unwrap()).unwrap();
    assert!(gray.pixels().iter().all(|p| p[0] == 0.0 || p[0] == 255.0));
}

#[test]
fn wrong_point_count_is_a_usage_error() {
    let o = seg(&["segment", "--image", "a.png", "--points", "1,2;3,4", "--mode", "extr", "--out", "m.png"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--points"));
}

#[test]
fn usage_and_help_exit_codes() {
    assert_eq!(seg(&[]).status.code(), Some(1));
    assert_eq!(seg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(seg(&["--help"]).status.code(), Some(0));
    assert_eq!(seg(&["--version"]).status.code(), Some(0));
    let o = seg(&["segment", "--image", "a.png", "--points", "1,2;3,4;5,6;7,8", "--mode", "lasso", "--out", "m"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mode"));
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.png");
    let o = seg(&[
        "segment",
        "--image",
        missing.to_str().unwrap(),
        "--points",
        "1,2;3,4;5,6;7,8",
        "--out",
        dir.path().join("m.png").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let img = dir.path().join("a.png");
    write_blob(&img);
    let o = seg(&[
        "segment",
        "--image",
        img.to_str().unwrap(),
        "--points",
        "1,2;3,2;5,2;7,2",
        "--out",
        dir.path().join("m.png").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zero area"));
}

#[test]
fn synth_then_eval_produces_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = seg(&["synth", "--out", corpus.to_str().unwrap(), "--count", "4", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let report = dir.path().join("r.json");
    let o = seg(&[
        "eval",
        "--images",
        corpus.join("images").to_str().unwrap(),
        "--annotations",
        corpus.join("annotations.jsonl").to_str().unwrap(),
        "--mode",
        "rect",
        "--report",
        report.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    for key in ["mode", "config", "per_class", "overall_micro", "overall_macro", "failures"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["mode"], "rect");
    assert_eq!(v["evaluated"], 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("IOU by class"));
}

#[test]
fn eval_without_valid_records_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.jsonl");
    fs::write(&ann, "{\"image\":\"x.png\",\"class\":\"velvet\",\"polygon\":[0,0,1,0,1,1]}\n").unwrap();
    let o = seg(&[
        "eval",
        "--images",
        dir.path().to_str().unwrap(),
        "--annotations",
        ann.to_str().unwrap(),
        "--report",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown class"));
}
