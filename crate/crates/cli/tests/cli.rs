use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use groundsynth::dataset::{write_shards, DatasetRecord, Manifest};
use groundsynth::eval::{write_suite, BannedRegion, BenchmarkSample, CorrectRegion, Prediction, Report};
use groundsynth::trace::{point_to_trace, CoordinateSpace, Template};
use groundsynth::{Modality, Point, Rect};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(modality: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["gen", modality, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn gen_canvas_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = gen("canvas", dir, &["--count", "10", "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ma = fs::read(a.join("manifest.json")).unwrap();
    assert_eq!(ma, fs::read(b.join("manifest.json")).unwrap());
    for i in 0..10 {
        let name = format!("annotations/{i:06}.json");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    let m: Manifest = serde_json::from_slice(&ma).unwrap();
    assert!(m.totals.records >= 10);
    assert_eq!(m.totals.by_modality[&Modality::Canvas], m.totals.records);
    assert_eq!(m.shards.iter().map(|s| s.count).sum::<usize>(), m.totals.records);
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let three = tmp.path().join("three");
    assert!(gen("table", &one, &["--count", "6", "--seed", "3", "--workers", "1"]).status.success());
    assert!(gen("table", &three, &["--count", "6", "--seed", "3", "--workers", "3"]).status.success());
    assert_eq!(
        fs::read(one.join("manifest.json")).unwrap(),
        fs::read(three.join("manifest.json")).unwrap()
    );
}

#[test]
fn gen_zero_count_writes_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("t");
    let o = gen("table", &dir, &["--count", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let m: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.totals.records, 0);
    assert!(m.shards.is_empty());
}

#[test]
fn gen_rejects_bad_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");
    assert_eq!(gen("canvas", &dir, &["--count", "1", "--width", "900"]).status.code(), Some(2));
    assert_eq!(gen("canvas", &dir, &["--count", "1", "--workers", "0"]).status.code(), Some(2));
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 1, "colour": "red"}"#).unwrap();
    let o = gen("canvas", &dir, &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // Refuses to write over an existing dataset.
    assert!(gen("image", &dir, &["--count", "1"]).status.success());
    assert_eq!(gen("image", &dir, &["--count", "1"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(r#"{{"seed": 5, "count": 2, "width": 1280, "height": 720, "out": {:?}}}"#, dir.to_str().unwrap()),
    )
    .unwrap();
    let o = run(&["gen", "canvas", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("scenes: 2"));
    let a: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("annotations/000000.json")).unwrap()).unwrap();
    assert_eq!(a["annotation"]["canvas"]["width"], 1280);
    assert_eq!(a["annotation"]["canvas"]["height"], 720);
}

fn sample(id: &str, banned: bool) -> BenchmarkSample {
    BenchmarkSample {
        id: id.into(),
        modality: Modality::Canvas,
        instruction: "Click the square.".into(),
        image_ref: "images/s.png".into(),
        image_size: [200.0, 200.0],
        correct_regions: vec![CorrectRegion::unranked(Rect::new(10.0, 10.0, 50.0, 50.0).unwrap())],
        banned_regions: if banned {
            vec![BannedRegion {
                shape: Rect::new(40.0, 40.0, 60.0, 60.0).unwrap().into(),
            }]
        } else {
            Vec::new()
        },
    }
}

fn eval(dir: &Path, samples: &[BenchmarkSample], preds: &[Prediction]) -> (Output, Option<Report>) {
    let (s, p, r) = (dir.join("suite.json"), dir.join("pred.json"), dir.join("report.json"));
    write_suite(&s, samples).unwrap();
    let lines: Vec<String> = preds.iter().map(|p| serde_json::to_string(p).unwrap()).collect();
    fs::write(&p, lines.join("\n")).unwrap();
    let _ = fs::remove_file(&r);
    let o = run(&[
        "eval",
        "--suite",
        s.to_str().unwrap(),
        "--predictions",
        p.to_str().unwrap(),
        "--report",
        r.to_str().unwrap(),
    ]);
    let report = fs::read(&r).ok().map(|b| serde_json::from_slice(&b).unwrap());
    (o, report)
}

fn pred(id: &str, x: f64, y: f64) -> Prediction {
    Prediction {
        sample_id: id.into(),
        points: vec![Point::new(x, y)],
    }
}

#[test]
fn eval_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, r) = eval(tmp.path(), &[sample("a", false), sample("b", false)], &[pred("a", 20.0, 20.0), pred("b", 30.0, 30.0)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("overall: 100.0"), "{}", stdout(&o));
    assert_eq!(r.unwrap().successes, 2);

    // A point inside the banned overlap fails even though it covers the target.
    let (o, r) = eval(tmp.path(), &[sample("a", true), sample("b", false)], &[pred("a", 45.0, 45.0), pred("b", 30.0, 30.0)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("overall: 50.0"));
    let v = serde_json::to_value(r.unwrap().per_sample["a"]).unwrap();
    assert_eq!(v["failed_rule"], "Banned");

    // Missing predictions count as failures.
    let (o, r) = eval(tmp.path(), &[sample("a", false), sample("b", false), sample("c", false)], &[pred("a", 20.0, 20.0)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("overall: 33.3"));
    assert!(!r.unwrap().per_sample["c"].success);
}

#[test]
fn eval_schema_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("suite.json");
    let p = tmp.path().join("pred.json");
    fs::write(&s, r#"{"samples": [{"id": "a", "modality": "Canvas", "instruction": "x", "image": "i.png", "image_size": [10, 10]}]}"#).unwrap();
    fs::write(&p, "").unwrap();
    let o = run(&["eval", "--suite", s.to_str().unwrap(), "--predictions", p.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("samples[0]") && err.contains("correct_regions"), "{err}");
}

fn record(x: f64, size: (u32, u32)) -> DatasetRecord {
    let trace = point_to_trace(
        &[Point::new(x, 20.0)],
        &Template::Click { clicks: None, button: None },
        CoordinateSpace::Pixels,
    )
    .unwrap();
    DatasetRecord::from_trace(&trace, "Click.", "images/x.png", Modality::Canvas, size)
}

fn dataset(dir: &Path, records: &[DatasetRecord]) {
    fs::create_dir_all(dir.join("images")).unwrap();
    fs::write(dir.join("images/x.png"), b"png").unwrap();
    write_shards(records, dir, 1000).unwrap();
}

#[test]
fn validate_clean_and_out_of_range() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean");
    dataset(&clean, &[record(10.0, (100, 100)), record(99.0, (100, 100))]);
    let o = run(&["validate", clean.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let bad = tmp.path().join("bad");
    dataset(&bad, &[record(10.0, (100, 100)), record(150.0, (100, 100))]);
    let o = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("OutOfRange"), "{}", stdout(&o));
}

#[test]
fn validate_reports_corrupt_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    dataset(&dir, &[record(10.0, (100, 100))]);
    let shard = dir.join("shard-00000.jsonl");
    let mut text = fs::read_to_string(&shard).unwrap();
    text.push_str("{\"prompt\": \"broken\"\n");
    fs::write(&shard, text).unwrap();
    let o = run(&["validate", shard.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("shard-00000.jsonl:2:"), "{}", stdout(&o));
    // Validating the directory also catches the checksum change.
    let o = run(&["validate", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("ManifestMismatch"));
}

#[test]
fn stats_and_mix() {
    let tmp = tempfile::tempdir().unwrap();
    let canvas = tmp.path().join("canvas");
    let image = tmp.path().join("image");
    assert!(gen("canvas", &canvas, &["--count", "4", "--seed", "1"]).status.success());
    assert!(gen("image", &image, &["--count", "4", "--seed", "1"]).status.success());
    let o = run(&["stats", image.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["invalid"], 0);
    assert!(s["breakdown"]["Image"]["combined:mouseDown NxmoveTo and mouseUp"]["NSet"].as_u64().unwrap() > 0);

    let out = tmp.path().join("mix");
    let o = run(&[
        "mix",
        "--source",
        &format!("Canvas={}", canvas.display()),
        "--source",
        &format!("Image={}", image.display()),
        "--weights",
        "Canvas=0.5,Image=0.5",
        "--count",
        "12",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["validate", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let m: Manifest = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.totals.records, 12);

    let bad = run(&["mix", "--source", "Canvas=/nonexistent", "--count", "1", "--out", tmp.path().join("m2").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}
