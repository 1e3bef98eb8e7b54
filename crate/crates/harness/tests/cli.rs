mod common;

use std::fs;

use common::{experiment, faithkit, path_arg, trained};
use faithkit_harness::curves::{curves_from_csv, CurveRow};
use faithkit_harness::evaluate::{read_records, records_path, FaithfulnessReport};
use faithkit_harness::interpolate::InterpolationTable;
use faithkit_harness::report::{parse_csv, render, Format};

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn train_reports_dev_accuracy_and_is_reproducible() {
    let (dir, cfg) = experiment("");
    let out = faithkit(&["train", "--config", path_arg(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let acc: f64 = stdout.trim().strip_prefix("dev accuracy: ").unwrap().parse().unwrap();
    assert!(acc >= 0.95, "dev accuracy {acc}");

    let ckpt = dir.path().join("model.ckpt");
    let first = fs::read(&ckpt).unwrap();
    let again = dir.path().join("again.ckpt");
    let out = faithkit(&["train", "--config", path_arg(&cfg), "--out", path_arg(&again)]);
    assert!(out.status.success());
    assert_eq!(first, fs::read(&again).unwrap());
    assert_eq!(
        fs::read(dir.path().join("model.ckpt.vocab")).unwrap(),
        fs::read(dir.path().join("again.ckpt.vocab")).unwrap()
    );

    let other = dir.path().join("other.ckpt");
    faithkit(&["train", "--config", path_arg(&cfg), "--seed", "99", "--out", path_arg(&other)]);
    assert_ne!(first, fs::read(&other).unwrap());
}

#[test]
fn missing_input_exits_two_and_names_the_path() {
    let (dir, cfg) = experiment("");
    fs::remove_file(dir.path().join("train.tsv")).unwrap();
    let out = faithkit(&["train", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("train.tsv"), "{}", stderr(&out));

    let out = faithkit(&["evaluate", "--config", "/nonexistent/exp.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/exp.cfg"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(faithkit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(faithkit(&["report", "--format", "xml"]).status.code(), Some(2));
    let (_dir, cfg) = experiment("colour = blue\n");
    let out = faithkit(&["evaluate", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("colour"));
}

#[test]
fn one_by_one_report_with_count_ten() {
    let (dir, cfg) = trained("methods = random\nmetrics = comp\nper_class = 5\n");
    let out = faithkit(&["evaluate", "--config", path_arg(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = FaithfulnessReport::load(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.cells.len(), 1);
    let cell = &report.cells[0];
    assert_eq!((cell.method.as_str(), cell.metric.as_str()), ("random", "comp"));
    assert_eq!((cell.count, cell.failures), (10, 0));
    assert_eq!(report.examples.len(), 10);
    assert!(report.significance.is_empty());
    assert_eq!(report.config["per_class"], "5");
}

#[test]
fn evaluate_is_byte_reproducible_and_auditable() {
    let extra = "methods = random, gradinp, occlusion\nper_class = 4\nthresholds = 0.2, 0.5\n";
    let (dir, cfg) = trained(extra);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = faithkit(&["evaluate", "--config", path_arg(&cfg), "--out", path_arg(p)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(records_path(&a)).unwrap(), fs::read(records_path(&b)).unwrap());

    let report = FaithfulnessReport::load(&a).unwrap();
    let records = read_records(&records_path(&a)).unwrap();
    assert_eq!(records.len(), 8 * 3 * 4);
    for cell in &report.cells {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.method == cell.method && r.metric == cell.metric && !r.failed)
            .map(|r| r.value.unwrap())
            .collect();
        let failures = records
            .iter()
            .filter(|r| r.method == cell.method && r.metric == cell.metric && r.failed)
            .count();
        assert_eq!(cell.count, values.len());
        assert_eq!(cell.failures, failures);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((cell.mean.unwrap() - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{cell:?}");
    }
    // 3 method pairs per metric.
    assert_eq!(report.significance.len(), 3 * 4);
}

#[test]
fn all_failed_exits_one() {
    let extra = "methods = gradinp\nmetrics = sens\nper_class = 2\n\
                 sensitivity_start = 1e-9\nsensitivity_doublings = 0\nsensitivity_iterations = 1\n";
    let (dir, cfg) = trained(extra);
    let out = faithkit(&["evaluate", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let report = FaithfulnessReport::load(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.cells[0].count, 0);
    assert_eq!(report.cells[0].failures, 4);
    assert_eq!(report.cells[0].mean, None);
}

#[test]
fn report_renders_text_and_round_trips_csv() {
    let (dir, cfg) = trained("methods = random, gradinp, deeplift\nmetrics = comp, suff\nper_class = 6\n");
    let out = faithkit(&["evaluate", "--config", path_arg(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let path = dir.path().join("report.json");
    let report = FaithfulnessReport::load(&path).unwrap();

    let out = faithkit(&["report", path_arg(&path), "--format", "csv"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv, render(&report, Format::Csv).unwrap());
    let rows = parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), report.cells.len());
    for row in &rows {
        let cell = report.cell(&row.method, &row.metric).unwrap();
        assert_eq!((row.mean, row.std, row.count, row.failures), (cell.mean, cell.std, cell.count, cell.failures));
    }
    for metric in ["comp", "suff"] {
        let in_metric: Vec<_> = rows.iter().filter(|r| r.metric == metric).collect();
        let best = in_metric.iter().find(|r| r.best).unwrap();
        for r in &in_metric {
            if metric == "comp" {
                assert!(best.mean.unwrap() >= r.mean.unwrap());
            } else {
                assert!(best.mean.unwrap() <= r.mean.unwrap());
            }
            if !r.best {
                let p = report.test(metric, &best.method, &r.method).unwrap().p;
                let expected = if p < 0.05 { "✓✓" } else if p < 0.10 { "✓" } else { "x" };
                assert_eq!(r.significance, expected);
            }
        }
        assert_eq!(in_metric.iter().filter(|r| r.best).count(), 1);
    }

    let out = faithkit(&["report", "--config", path_arg(&cfg)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("comp ↑") && text.contains("suff ↓") && text.contains('*'));
}

#[test]
fn empty_report_exits_two() {
    let dir = tempfile::TempDir::new().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    assert_eq!(faithkit(&["report", path_arg(&empty)]).status.code(), Some(2));
    let blank = dir.path().join("blank.json");
    fs::write(
        &blank,
        r#"{"version":"x","seed":0,"examples":[],"methods":[],"metrics":[],"config":{},"cells":[],"significance":[]}"#,
    )
    .unwrap();
    assert_eq!(faithkit(&["report", path_arg(&blank)]).status.code(), Some(2));
}

#[test]
fn curves_rows_clamp_and_round_trip() {
    let (dir, cfg) = trained("methods = gradinp\nper_class = 3\ncurve_ks = 3\n");
    let out = faithkit(&["curves", "--config", path_arg(&cfg), "--out", path_arg(&dir.path().join("one.csv"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("one.csv")).unwrap();
    let rows = curves_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].clamped, 0);
    assert_eq!(text.lines().count(), 2);

    let (dir, cfg) = trained("methods = random, gradinp\nper_class = 3\ncurve_ks = 1, 2, 50\n");
    let out = faithkit(&["curves", "--config", path_arg(&cfg)]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let rows: Vec<CurveRow> = curves_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.examples, 6);
        assert_eq!(r.clamped, if r.k == 50 { 6 } else { 0 });
    }
    // Removing every token is the largest possible removal for each example.
    let full = rows.iter().find(|r| r.method == "gradinp" && r.k == 50).unwrap();
    let one = rows.iter().find(|r| r.method == "gradinp" && r.k == 1).unwrap();
    assert!(full.mean_comprehensiveness.unwrap() >= one.mean_comprehensiveness.unwrap());
    assert_eq!(faithkit_harness::curves::curves_to_csv(&rows).unwrap(), text);
}

#[test]
fn interpolation_endpoints_and_determinism() {
    let (dir, cfg) = trained("interp_examples = 12\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = faithkit(&["interpolate", "--config", path_arg(&cfg), "--out", path_arg(p)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let table = InterpolationTable::from_csv(&text).unwrap();
    assert!(!table.rows.is_empty() && table.rows.len() <= 12);
    assert_eq!(table.mean[0], 0.0);
    assert_eq!(table.mean[4], 1.0);
    for i in 0..5 {
        let max = table.rows.iter().map(|(_, v)| v[i]).fold(0.0, f64::max);
        assert!(table.mean[i] >= 0.0 && table.mean[i] <= max, "column {i}");
    }
    assert_eq!(table.to_csv().unwrap(), text);
}
