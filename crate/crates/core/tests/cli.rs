use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pccdr::{evaluate, load_matrix, DataMatrix, InputFormat, MetricReport};
use tempfile::TempDir;

fn pccdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pccdr")).args(args).env_remove("PCCDR_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    out
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_csv(path: &Path, rows: &[&[f64]]) {
    let text: String = rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(path, text).unwrap();
}

fn read(path: &Path) -> DataMatrix {
    load_matrix(path, InputFormat::Csv, false, None).unwrap()
}

fn blobs(dir: &TempDir, n: usize) -> PathBuf {
    let x = p(dir, "blobs.csv");
    let n = n.to_string();
    ok(pccdr(&["dataset", "blobs", "--n", &n, "--dim", "5", "--centers", "4", "--seed", "1", "--out", s(&x)]));
    x
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = pccdr(&["fit", "--out", "/tmp/never.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--input"));
    assert!(stderr(&out).to_lowercase().contains("usage"));
    assert_eq!(code(&pccdr(&["frobnicate"])), 2);
    assert_eq!(code(&pccdr(&["--help"])), 0);
}

#[test]
fn fit_writes_embedding_and_report() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 120);
    let emb = p(&dir, "emb.csv");
    let report = p(&dir, "report.json");
    ok(pccdr(&[
        "fit", "--input", s(&x), "--out", s(&emb), "--dim", "3", "--iters", "40", "--clusters", "4,8",
        "--k-refs", "30", "--report", s(&report),
    ]));
    let e = read(&emb);
    assert_eq!((e.rows(), e.cols()), (120, 3));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let trace = json["loss_trace"].as_array().unwrap();
    assert_eq!(trace.len(), 40);
    for key in ["iter", "total", "corr", "cluster", "anchor"] {
        assert!(trace[0][key].is_number(), "{key}");
    }
    assert!(json["wall_ms"].is_u64());
    assert_eq!(json["config"]["cluster_counts"], serde_json::json!([4, 8]));
}

#[test]
fn correlation_only_fit_on_plane_data() {
    let dir = TempDir::new().unwrap();
    let x = p(&dir, "plane.csv");
    let rows: Vec<Vec<f64>> = (0..150).map(|i| vec![(i as f64 * 0.37).sin() * 4.0 + i as f64 * 0.01, (i as f64 * 1.3).cos() * 2.0]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    write_csv(&x, &refs);
    let emb = p(&dir, "emb.csv");
    ok(pccdr(&["fit", "--input", s(&x), "--out", s(&emb), "--clusters", "none", "--beta", "1"]));
    let out = ok(pccdr(&["evaluate", "--input", s(&x), "--embedding", s(&emb), "--metric-k", "10"]));
    let r: MetricReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.gs_avg >= 0.99, "gs_avg {}", r.gs_avg);
}

#[test]
fn evaluate_identity_and_in_process_equality() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 80);
    let out = ok(pccdr(&["evaluate", "--input", s(&x), "--embedding", s(&x), "--metric-k", "5"]));
    let r: MetricReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.ls_avg, 1.0);
    assert!((r.gs_avg - 1.0).abs() < 1e-12);

    let emb = p(&dir, "emb.csv");
    ok(pccdr(&["fit", "--input", s(&x), "--out", s(&emb), "--iters", "20", "--clusters", "4"]));
    let report = p(&dir, "metrics.json");
    let out = ok(pccdr(&["evaluate", "--input", s(&x), "--embedding", s(&emb), "--metric-k", "7", "--out", s(&report)]));
    assert!(out.stdout.is_empty());
    let from_cli: MetricReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let in_process = evaluate(&read(&x), &read(&emb), 7).unwrap();
    assert_eq!(from_cli, in_process);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["trustworthiness", "continuity", "mrre_false", "mrre_missing", "pearson_global", "spearman_global", "ls_avg", "gs_avg", "k_neighbors"] {
        assert!(json[key].is_number(), "{key}");
    }
}

#[test]
fn evaluate_rejects_shape_mismatch_and_bad_k() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 40);
    let y = p(&dir, "short.csv");
    write_csv(&y, &[&[0.0, 1.0], &[1.0, 0.0], &[2.0, 2.0]]);
    assert_eq!(code(&pccdr(&["evaluate", "--input", s(&x), "--embedding", s(&y)])), 3);
    assert_eq!(code(&pccdr(&["evaluate", "--input", s(&x), "--embedding", s(&x), "--metric-k", "20"])), 2);
}

#[test]
fn data_errors_exit_three_with_location() {
    let dir = TempDir::new().unwrap();
    let x = p(&dir, "bad.csv");
    fs::write(&x, "1,2\n3,abc\n").unwrap();
    let out = pccdr(&["fit", "--input", s(&x), "--out", s(&p(&dir, "e.csv"))]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
    let ragged = p(&dir, "ragged.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    assert_eq!(code(&pccdr(&["fit", "--input", s(&ragged), "--out", s(&p(&dir, "e.csv"))])), 3);
    assert_eq!(code(&pccdr(&["fit", "--input", s(&p(&dir, "absent.csv")), "--out", s(&p(&dir, "e.csv"))])), 3);
    let constant = p(&dir, "constant.csv");
    fs::write(&constant, "1,1\n1,1\n1,1\n1,1\n").unwrap();
    assert_eq!(code(&pccdr(&["fit", "--input", s(&constant), "--out", s(&p(&dir, "e.csv")), "--clusters", "none"])), 3);
}

#[test]
fn numerical_failure_exits_four() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 100);
    let out = pccdr(&["fit", "--input", s(&x), "--out", s(&p(&dir, "e.csv")), "--lr", "1e308", "--iters", "20"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn refine_checks_rows_and_respects_anchor() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 100);
    let init = p(&dir, "init.csv");
    ok(pccdr(&["fit", "--input", s(&x), "--out", s(&init), "--iters", "10", "--clusters", "4"]));
    let out = p(&dir, "refined.csv");
    let report = p(&dir, "refine.json");
    ok(pccdr(&[
        "refine", "--input", s(&x), "--init", s(&init), "--out", s(&out), "--lambda", "1e9", "--report", s(&report),
    ]));
    let (a, b) = (read(&init), read(&out));
    let worst = a.values().iter().zip(b.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let trace = json["loss_trace"].as_array().unwrap();
    assert_eq!(trace.len(), 3);
    assert!(trace.iter().all(|r| r["anchor"].is_number()));

    let short = p(&dir, "short.csv");
    write_csv(&short, &[&[0.0, 1.0], &[1.0, 0.0]]);
    let bad = pccdr(&["refine", "--input", s(&x), "--init", s(&short), "--out", s(&out)]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn benchmark_rows_summary_and_errors() {
    let dir = TempDir::new().unwrap();
    let rows = p(&dir, "rows.csv");
    let summary = p(&dir, "summary.json");
    ok(pccdr(&[
        "benchmark", "--dataset", "swissroll", "--n", "150", "--methods", "pcc,pca", "--iters", "30", "--out", s(&rows),
        "--summary", s(&summary), "--metric-k", "10",
    ]));
    let mut rdr = csv::Reader::from_path(&rows).unwrap();
    let headers = rdr.headers().unwrap().clone();
    for h in ["dataset", "method", "seed", "trustworthiness", "gs_avg", "ls_avg", "wall_ms"] {
        assert!(headers.iter().any(|x| x == h), "{h}");
    }
    let records: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 2);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["methods"].as_array().unwrap().len(), 2);
    assert_eq!(json["methods"][0]["method"], "pcc");

    let unknown = pccdr(&["benchmark", "--dataset", "swissroll", "--methods", "tsne", "--out", s(&rows)]);
    assert_eq!(code(&unknown), 2);
    assert_eq!(code(&pccdr(&["benchmark", "--dataset", "mnist", "--out", s(&rows)])), 2);

    let short = p(&dir, "short.csv");
    write_csv(&short, &[&[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
    let arg = format!("pca,external:other={}", s(&short));
    let wrong = pccdr(&["benchmark", "--dataset", "swissroll", "--n", "150", "--methods", &arg, "--out", s(&rows)]);
    assert_eq!(code(&wrong), 3);
}

#[test]
fn benchmark_evaluates_external_embeddings_and_files() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 90);
    let ext = p(&dir, "ext.csv");
    fs::copy(&x, &ext).unwrap();
    let rows = p(&dir, "rows.csv");
    let dataset = format!("file:{}", s(&x));
    let methods = format!("pca,external:copy={}", s(&ext));
    let out = ok(pccdr(&["benchmark", "--dataset", &dataset, "--methods", &methods, "--seeds", "0,1", "--out", s(&rows), "--metric-k", "5"]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["seeds"], serde_json::json!([0, 1]));
    let copy = &json["methods"][1];
    assert_eq!(copy["method"], "copy");
    assert_eq!(copy["runs"], 2);
    assert_eq!(copy["ls_avg"], 1.0);
    assert_eq!(csv::Reader::from_path(&rows).unwrap().records().count(), 4);
}

#[test]
fn plot_svg_and_rgb() {
    let dir = TempDir::new().unwrap();
    let emb = p(&dir, "e2.csv");
    write_csv(&emb, &[&[0.0, 0.0], &[1.0, 2.0], &[3.0, -1.0]]);
    let svg = p(&dir, "plot.svg");
    ok(pccdr(&["plot", "--embedding", s(&emb), "--out", s(&svg)]));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<circle").count(), 3);

    let emb8 = p(&dir, "e8.csv");
    let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64]).collect();
    write_csv(&emb8, &pts.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
    let labels = p(&dir, "labels.csv");
    fs::write(&labels, "0\n1\n2\n3\n0\n1\n2\n3\n").unwrap();
    ok(pccdr(&["plot", "--embedding", s(&emb8), "--labels", s(&labels), "--out", s(&svg)]));
    let text = fs::read_to_string(&svg).unwrap();
    let mut fills: Vec<&str> = text.lines().filter(|l| l.starts_with("<circle")).map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap()).collect();
    fills.sort();
    fills.dedup();
    assert_eq!(fills.len(), 4);

    let input8 = p(&dir, "x8.csv");
    write_csv(&input8, &pts.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
    ok(pccdr(&["plot", "--embedding", s(&emb8), "--color-by-distance-from", "2", "--input", s(&input8), "--out", s(&svg)]));
    assert!(fs::read_to_string(&svg).unwrap().contains("stroke=\"red\""));

    let emb3 = p(&dir, "e3.csv");
    write_csv(&emb3, &[&[0.0, 5.0, 1.0], &[2.0, 5.0, 3.0], &[1.0, 5.0, 2.0]]);
    let out = pccdr(&["plot", "--embedding", s(&emb3), "--out", s(&svg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--rgb-out"));
    let rgb = p(&dir, "rgb.csv");
    ok(pccdr(&["plot", "--embedding", s(&emb3), "--rgb-out", s(&rgb)]));
    assert_eq!(fs::read_to_string(&rgb).unwrap(), "0,0,0\n255,0,255\n128,0,128\n");
}

#[test]
fn dataset_generation_with_labels() {
    let dir = TempDir::new().unwrap();
    let x = p(&dir, "roll.csv");
    let labels = p(&dir, "t.csv");
    ok(pccdr(&["dataset", "swissroll", "--n", "50", "--seed", "3", "--out", s(&x), "--labels-out", s(&labels)]));
    let m = read(&x);
    assert_eq!((m.rows(), m.cols()), (50, 3));
    assert_eq!(fs::read_to_string(&labels).unwrap().lines().count(), 50);
    assert_eq!(code(&pccdr(&["dataset", "spiral", "--n", "5", "--out", s(&x)])), 2);
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let x = blobs(&dir, 60);
    let a = p(&dir, "a.csv");
    let b = p(&dir, "b.csv");
    ok(pccdr(&["--threads", "1", "fit", "--input", s(&x), "--out", s(&a), "--iters", "15", "--clusters", "4"]));
    let out = Command::new(env!("CARGO_BIN_EXE_pccdr"))
        .args(["fit", "--input", s(&x), "--out", s(&b), "--iters", "15", "--clusters", "4"])
        .env("PCCDR_THREADS", "1")
        .output()
        .unwrap();
    ok(out);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(code(&pccdr(&["--threads", "0", "fit", "--input", s(&x), "--out", s(&a)])), 2);
}
