use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn entrolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrolab")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn estimate(cfg: &Path, out: &Path) -> Output {
    entrolab(&["--out", out.to_str().unwrap(), "estimate", cfg.to_str().unwrap()])
}

fn compare(cfg: &Path, out: &Path) -> Output {
    entrolab(&["--out", out.to_str().unwrap(), "compare-metrics", cfg.to_str().unwrap()])
}

/// `(metric, estimator) -> headline` from comparison.csv.
fn comparison(out: &Path) -> Vec<(String, String, f64)> {
    let mut r = csv::Reader::from_path(out.join("comparison.csv")).unwrap();
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].to_string(), rec[1].to_string(), rec[2].parse().unwrap())
    })
    .collect()
}

fn headline(rows: &[(String, String, f64)], metric: &str, estimator: &str) -> f64 {
    rows.iter().find(|(m, e, _)| m == metric && e == estimator).unwrap().2
}

#[test]
fn identity_has_zero_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "id.json", r#"{"system": {"kind": "identity", "space": {"kind": "circle"}}, "n_max": 8}"#);
    let o = estimate(&cfg, &dir.path().join("out"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.000000"), "{}", stdout(&o));
}

#[test]
fn doubling_default_run_lands_near_log_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "dbl.json", r#"{"system": {"kind": "circle_affine", "m": 2}}"#);
    let out = dir.path().join("out");
    let o = estimate(&cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("headlines.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let h: f64 = rows[0][2].parse().unwrap();
    assert!((0.62..=0.77).contains(&h), "{h}");
    assert!(out.join("summary.json").exists());
    assert!(out.join("d_entropy-circle_arc.json").exists());
}

#[test]
fn missing_system_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"n_max": 8}"#);
    let o = estimate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("system"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"system": {"kind": "circle_affine", "m": 2}, "nmax": 8}"#);
    let o = estimate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nmax"), "{}", stderr(&o));
}

#[test]
fn short_horizons_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"system": {"kind": "circle_affine", "m": 2}, "n_max": 3}"#);
    let o = estimate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_max"), "{}", stderr(&o));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = estimate(&dir.path().join("absent.json"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let o = entrolab(&["verify", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sandwich_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = entrolab(&["--out", out.to_str().unwrap(), "verify", "sandwich"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("instances checked"), "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 violations"), "{}", stdout(&o));
    assert!(out.join("verify-sandwich.json").exists());
}

#[test]
fn comparing_needs_two_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"system": {"kind": "circle_affine", "m": 2}, "metrics": [{"kind": "circle_arc"}]}"#);
    let o = compare(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compactified_metric_lowers_entropy_of_linear_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{
            "system": {"kind": "linear", "matrix": [[2.0]]},
            "metrics": [{"kind": "euclidean"}, {"kind": "compactified"}],
            "estimators": ["d_entropy", "bowen"],
            "epsilons": [0.5, 0.25, 0.125, 0.0625],
            "n_max": 10,
            "sample": {"kind": "stereographic", "count": 4096},
            "compacts": [{"compact": {"kind": "box", "lo": [0.0], "hi": [1.0]},
                          "sample": {"kind": "grid", "lo": [0.0], "hi": [1.0], "per_dim": 4097}}]
        }"#,
    );
    let out = dir.path().join("out");
    let o = compare(&cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = comparison(&out);
    let euclid = headline(&rows, "euclidean", "bowen");
    let compact = headline(&rows, "compactified", "d_entropy");
    assert!((0.62..=0.77).contains(&euclid), "{euclid}");
    assert!(compact <= euclid - 0.4, "{compact} vs {euclid}");
    assert!(stdout(&o).contains("attains the minimum for d_entropy: yes"), "{}", stdout(&o));
}

#[test]
fn equivalent_metrics_on_the_circle_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{"system": {"kind": "circle_affine", "m": 2},
            "metrics": [{"kind": "circle_arc"}, {"kind": "compactified"}],
            "estimators": ["d_entropy"],
            "epsilons": [0.25, 0.125, 0.0625], "n_max": 12}"#,
    );
    let out = dir.path().join("out");
    let o = compare(&cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = comparison(&out);
    let arc = headline(&rows, "circle_arc", "d_entropy");
    let chord = headline(&rows, "compactified", "d_entropy");
    assert!((arc - chord).abs() <= 0.05, "{arc} vs {chord}");
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{"system": {"kind": "circle_affine", "m": 2},
            "estimators": ["d_entropy", "bowen", "topological", "kolmogorov_sinai"],
            "sample": {"kind": "random_circle", "count": 1024},
            "n_max": 8, "seed": 7}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(estimate(&cfg, &a).status.success());
    assert!(estimate(&cfg, &b).status.success());
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.len() > 3);
    assert_eq!(fa, fb);
}

#[test]
fn computational_failures_exit_one_and_keep_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{"system": {"kind": "sft", "adjacency": [[1, 1], [1, 1]]}, "n_max": 12,
            "sample": {"kind": "words", "len": 3}}"#,
    );
    let out = dir.path().join("out");
    let o = estimate(&cfg, &out);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["failure"].is_string());
}
