//! The `cutclust` binary end to end.

use std::fs;
use std::process::{Command, Output};

fn cutclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const QUICK: &[&str] = &["--preset", "synthetic", "--synthetic", "", "--pretrain-epochs", "20", "--train-epochs", "10"];

fn with(extra: &[&str]) -> Vec<String> {
    QUICK.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(sub: &str, extra: &[&str]) -> Output {
    let mut args = vec![sub.to_string()];
    args.extend(with(extra));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    cutclust(&refs)
}

fn is_metrics_line(line: &str) -> bool {
    let parts: Vec<&str> = line.split(' ').collect();
    parts.len() == 4
        && ["ACC=", "NMI=", "ARI=", "F1="]
            .iter()
            .zip(&parts)
            .all(|(key, part)| part.strip_prefix(key).is_some_and(|v| v.parse::<f64>().is_ok()))
}

#[test]
fn metrics_only_prints_one_line() {
    let out = run("run", &["--metrics-only", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    assert!(is_metrics_line(lines[0]), "{text}");
}

#[test]
fn out_writes_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run("run", &["--deterministic", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().starts_with("nodes=60 clusters=3"), "{text}");
    assert!(is_metrics_line(text.lines().last().unwrap()));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["train"].as_array().unwrap().len(), 10);
    assert_eq!(report["pretrain"].as_array().unwrap().len(), 20);
    assert!(report["metrics"]["acc"].as_f64().is_some());
}

#[test]
fn failures_exit_nonzero_with_structured_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "alpha = 3.0\n").unwrap();
    let out = cutclust(&["run", "--config", bad.to_str().unwrap(), "--synthetic", ""]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error["), "{err}");
    assert!(err.contains("alpha"), "{err}");

    let out = cutclust(&["run", "--preset", "synthetic"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));

    let out = cutclust(&["run", "--dataset", dir.path().join("nope.txt").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]"));
}

#[test]
fn generated_dataset_runs_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = cutclust(&["gen-synthetic", "--synthetic", "seed=2", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = stdout(&out).trim().to_string();
    assert!(manifest.ends_with("manifest.txt"));
    let from_disk = cutclust(&[
        "run", "--preset", "synthetic", "--dataset", &manifest, "--pretrain-epochs", "20", "--train-epochs", "10", "--metrics-only",
    ]);
    assert!(from_disk.status.success(), "{}", String::from_utf8_lossy(&from_disk.stderr));
    let in_memory = cutclust(&[
        "run", "--preset", "synthetic", "--synthetic", "seed=2", "--pretrain-epochs", "20", "--train-epochs", "10", "--metrics-only",
    ]);
    assert_eq!(stdout(&from_disk), stdout(&in_memory));
}

#[test]
fn empty_sweep_succeeds() {
    let out = run("sweep", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run("sweep", &["--grid", "gamma=0.1,0.4", "--metrics-only"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("gamma=") && is_metrics_line(l.split('\t').nth(1).unwrap())));
}

#[test]
fn ablate_lists_every_variant() {
    let out = run("ablate", &["--metrics-only"]);
    assert!(out.status.success());
    let labels: Vec<String> = stdout(&out).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(labels, ["full", "w/o O", "w/o A", "w/o OA", "w/o Orthogonal", "w/o OptTrans"]);
}

#[test]
fn export_writes_projection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.csv");
    let out = run("export", &["--embeddings", path.to_str().unwrap(), "--pca"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("node_id,h_1,") && header.ends_with("true_label,pred_label,pc_1,pc_2"), "{header}");
    assert_eq!(text.lines().count(), 61);
}

#[test]
fn pretrain_only_reports_metrics() {
    let out = run("pretrain", &["--metrics-only"]);
    assert!(out.status.success());
    assert!(is_metrics_line(stdout(&out).trim()));
}
