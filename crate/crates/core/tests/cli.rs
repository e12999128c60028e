use std::path::Path;
use std::process::{Command, Output};

use lungcad::eval::metrics;

fn lungcad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lungcad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = lungcad(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_and_extract(dir: &Path, n: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = dir.join("data");
    ok(&[
        "synth",
        "--out",
        s(&data),
        "--n-benign",
        n,
        "--n-malignant",
        n,
        "--seed",
        "7",
    ]);
    let manifest = data.join("manifest.json");
    let features = dir.join("features.csv");
    ok(&["extract", "--manifest", s(&manifest), "--out", s(&features)]);
    (manifest, features)
}

#[test]
fn full_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (manifest, features) = synth_and_extract(d, "20");

    let csv = std::fs::read_to_string(&features).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 41);
    assert!(lines.iter().all(|l| l.split(',').count() == 31));
    let again = d.join("again.csv");
    ok(&["extract", "--manifest", s(&manifest), "--out", s(&again)]);
    assert_eq!(
        std::fs::read(&features).unwrap(),
        std::fs::read(&again).unwrap()
    );

    ok(&[
        "split",
        "--features",
        s(&features),
        "--manifest",
        s(&manifest),
        "--out",
        s(d),
        "--split-level",
        "subject",
    ]);
    let (train, test) = (d.join("train.csv"), d.join("test.csv"));
    let tuned = d.join("tuned");
    ok(&[
        "tune",
        "--features",
        s(&train),
        "--family",
        "adaboost",
        "--out",
        s(&tuned),
    ]);
    let table = std::fs::read_to_string(tuned.join("cv_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
    assert_eq!(table.lines().filter(|l| l.ends_with(",1")).count(), 1);

    let model = d.join("model.json");
    ok(&[
        "train",
        "--features",
        s(&train),
        "--best",
        s(&tuned.join("best.json")),
        "--out",
        s(&model),
    ]);
    let report_path = d.join("report.json");
    ok(&[
        "eval",
        "--model",
        s(&model),
        "--features",
        s(&test),
        "--out",
        s(&report_path),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["family"], "adaboost");
    let counts: lungcad::ConfusionCounts =
        serde_json::from_value(report["confusion"].clone()).unwrap();
    let m = metrics(&counts).unwrap();
    assert_eq!(
        report["metrics"]["sensitivity"].as_f64().unwrap(),
        m.sensitivity
    );
    assert_eq!(
        report["metrics"]["specificity"].as_f64().unwrap(),
        m.specificity
    );
    assert_eq!(report["metrics"]["accuracy"].as_f64().unwrap(), m.accuracy);
    assert_eq!(
        report["metrics"]["f_measure"].as_f64().unwrap(),
        m.f_measure
    );
    assert!(report["auc"].as_f64().unwrap() >= 0.9);

    let roc = d.join("roc.csv");
    ok(&[
        "roc",
        "--model",
        s(&model),
        "--features",
        s(&test),
        "--out",
        s(&roc),
    ]);
    let roc_text = std::fs::read_to_string(&roc).unwrap();
    assert!(roc_text.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
    assert!(roc_text.lines().last().unwrap().starts_with("auc,"));

    let one_row = d.join("one.csv");
    let test_csv = std::fs::read_to_string(&test).unwrap();
    let mut it = test_csv.lines();
    std::fs::write(
        &one_row,
        format!("{}\n{}\n", it.next().unwrap(), it.next().unwrap()),
    )
    .unwrap();
    let preds = d.join("preds.csv");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--features",
        s(&one_row),
        "--out",
        s(&preds),
    ]);
    let pred_text = std::fs::read_to_string(&preds).unwrap();
    let pred_lines: Vec<&str> = pred_text.lines().collect();
    assert_eq!(pred_lines[0], "id,score,label");
    assert_eq!(pred_lines.len(), 2);
    let cells: Vec<&str> = pred_lines[1].split(',').collect();
    let score: f64 = cells[1].parse().unwrap();
    let theta = lungcad::TrainedClassifier::load(&model).unwrap().threshold;
    assert_eq!(cells[2], if score >= theta { "1" } else { "-1" });
}

#[test]
fn missing_image_names_nodule() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = synth_and_extract(dir.path(), "2");
    std::fs::remove_file(dir.path().join("data/images/n0003.pgm")).unwrap();
    let out = lungcad(&[
        "extract",
        "--manifest",
        s(&manifest),
        "--out",
        s(&dir.path().join("f.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n0003"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (_, features) = synth_and_extract(d, "8");
    ok(&["split", "--features", s(&features), "--out", s(d)]);
    let tuned = d.join("t");
    ok(&[
        "tune",
        "--features",
        s(&d.join("train.csv")),
        "--family",
        "logreg",
        "--out",
        s(&tuned),
    ]);
    let model = d.join("model.json");
    ok(&[
        "train",
        "--features",
        s(&d.join("train.csv")),
        "--best",
        s(&tuned.join("best.json")),
        "--out",
        s(&model),
    ]);

    let text = std::fs::read_to_string(&model).unwrap();
    let future = d.join("future.json");
    std::fs::write(&future, text.replacen("\"schema\": 1", "\"schema\": 2", 1)).unwrap();
    let out = lungcad(&[
        "eval",
        "--model",
        s(&future),
        "--features",
        s(&d.join("test.csv")),
        "--out",
        s(&d.join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema version 2"));

    let benign_only = d.join("benign.csv");
    let csv = std::fs::read_to_string(d.join("test.csv")).unwrap();
    let kept: Vec<&str> = csv
        .lines()
        .filter(|l| !l.split(',').nth(1).is_some_and(|c| c == "1"))
        .collect();
    std::fs::write(&benign_only, kept.join("\n") + "\n").unwrap();
    let out = lungcad(&[
        "eval",
        "--model",
        s(&model),
        "--features",
        s(&benign_only),
        "--out",
        s(&d.join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = lungcad(&[
        "tune",
        "--features",
        s(&features),
        "--family",
        "lda",
        "--out",
        s(d),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("r.json").exists());
}
