use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn stenoscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stenoscan"))
        .args(args)
        .env_remove("STENOSCAN_WORKERS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = stenoscan(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

/// A small cohort shared by the experiment tests.
fn cohort() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, csv) = DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("cohort.csv");
        ok(&[
            "generate",
            "--n",
            "60",
            "--seed",
            "11",
            "--out",
            csv.to_str().unwrap(),
        ]);
        (dir, csv)
    });
    csv
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn generate_is_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&[
        "generate",
        "--n",
        "8",
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    ok(&[
        "generate",
        "--n",
        "8",
        "--seed",
        "7",
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "3",
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        read(&a.with_extension("json")),
        read(&b.with_extension("json"))
    );
    assert_eq!(read(&a).lines().count(), 9);
}

#[test]
fn zero_patients_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = stenoscan(&[
        "generate",
        "--n",
        "0",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");
}

#[test]
fn config_file_values_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"n_target": 0}"#).unwrap();
    let csv = dir.path().join("x.csv");
    let out = stenoscan(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&config, "{ not json").unwrap();
    let out = stenoscan(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(error_kind(&out), "usage");
    assert_eq!(stenoscan::vpd::VpdConfig::default().n_target, 7128);
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = stenoscan(&[
        "search",
        "--dataset",
        "nowhere.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "data");
}

#[test]
fn search_table_shape_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let data = cohort().to_str().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&[
            "search",
            "--dataset",
            data,
            "--methods",
            "lr,svm,nb,rf",
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        out
    };
    let a = run("a", "1");
    let b = run("b", "2");
    let csv = read(&a.join("search.csv"));
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + 4 * 3);
    assert_eq!(csv.lines().count(), 64);
    for name in [
        "search.csv",
        "sizes.csv",
        "like_for_like.csv",
        "discrepancy.csv",
        "search.json",
        "run.json",
        "sizes.svg",
    ] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name}");
    }
    let sizes = read(&a.join("sizes.csv"));
    assert_eq!(sizes.lines().filter(|l| l.starts_with("lr,")).count(), 6);
}

#[test]
fn ivbc_search_records_the_weighting() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "search",
        "--dataset",
        cohort().to_str().unwrap(),
        "--scheme",
        "ivbc:aorta",
        "--methods",
        "lr",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let run: serde_json::Value = serde_json::from_str(&read(&dir.path().join("run.json"))).unwrap();
    assert_eq!(run["scheme"], "ivbc:aorta");
    assert_eq!(run["config"]["ratio"], 1.0);
    let table: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("search.json"))).unwrap();
    let w = table["cells"][0]["evaluation"]["folds"][0]["test"]["precision_weight"]
        .as_f64()
        .unwrap();
    assert!(w > 3.0, "aorta is a sixth of the cohort, weight {w}");
}

#[test]
fn ivbc_default_methods_leave_out_naive_bayes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("eval.json");
    std::fs::write(
        &config,
        r#"{"forest_grid": [[5, 2]], "svm": {"max_iterations": 100000}}"#,
    )
    .unwrap();
    let args = |out: &str| {
        vec![
            "search".to_string(),
            "--dataset".into(),
            cohort().to_str().unwrap().into(),
            "--scheme".into(),
            "ivbc:iliac1".into(),
            "--config".into(),
            config.to_str().unwrap().into(),
            "--out".into(),
            dir.path().join(out).to_str().unwrap().into(),
        ]
    };
    let plain = args("plain");
    ok(&plain.iter().map(String::as_str).collect::<Vec<_>>());
    let mut with_nb = args("nb");
    with_nb.push("--include-nb".into());
    ok(&with_nb.iter().map(String::as_str).collect::<Vec<_>>());
    let header = |d: &str| {
        read(&dir.path().join(d).join("search.csv"))
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert!(!header("plain").contains("nb_f"));
    assert!(header("nb").contains("nb_f"));
}

#[test]
fn multiclass_boundary_of_one_is_all_healthy() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "multiclass",
        "--dataset",
        cohort().to_str().unwrap(),
        "--strategy",
        "cpc",
        "--boundary",
        "1.0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = read(&dir.path().join("multiclass.csv"));
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["class", "sensitivity", "specificity"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1][..2], ["C1", "1.000000"]);
    for r in &rows[2..] {
        assert_eq!(r[1], "0.000000");
    }
}

#[test]
fn roc_runs_from_origin_to_corner() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "multiclass",
        "--dataset",
        cohort().to_str().unwrap(),
        "--strategy",
        "cpc",
        "--roc",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = read(&dir.path().join("roc.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 201);
    assert!(lines[1].ends_with(",0.000000,0.000000"));
    assert!(lines[201].ends_with(",1.000000,1.000000"));
    assert!(dir.path().join("roc.svg").exists());
}

#[test]
fn unknown_strategy_and_roc_without_cpc() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = stenoscan(&[
        "multiclass",
        "--dataset",
        cohort().to_str().unwrap(),
        "--strategy",
        "ovx",
        "--out",
        out,
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = stenoscan(&[
        "multiclass",
        "--dataset",
        cohort().to_str().unwrap(),
        "--strategy",
        "ova",
        "--roc",
        "--out",
        out,
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn size_sweep_rows_and_default_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let data = cohort().to_str().unwrap();
    let a = dir.path().join("a");
    ok(&[
        "size-sweep",
        "--dataset",
        data,
        "--sizes",
        "30,60",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(read(&a.join("sweep.csv")).lines().count(), 1 + 2 * 3);
    let run: serde_json::Value = serde_json::from_str(&read(&a.join("run.json"))).unwrap();
    assert_eq!(run["sizes"], serde_json::json!([30, 60]));
    let b = dir.path().join("b");
    ok(&[
        "size-sweep",
        "--dataset",
        data,
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(read(&b.join("sweep.csv")).lines().count(), 1 + 4 * 3);
    let too_big = stenoscan(&[
        "size-sweep",
        "--dataset",
        data,
        "--sizes",
        "61",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(too_big.status.code(), Some(2));
}
