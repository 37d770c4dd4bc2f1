//! End-to-end runs of the installed binary: argument handling, exit codes,
//! and file round trips, each on a freshly written configuration.

use clansim::io::records::{ledger_path, read_samples};
use std::path::{Path, PathBuf};
use std::process::Output;

const TOY: &str = r#"
[model]
kind = "toy-hardcore"
entries = [["a", 0.4], ["b", 0.4]]
pairs = [["a", "b"]]

[window]
kind = "all"

[run]
seed = 21
n = 50
"#;

const BOND: &str = r#"
[model]
kind = "random-cluster"
p = 0.5
q = 2.0
width = 2
height = 2

[window]
kind = "all"

[run]
seed = 5
n = 30
"#;

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_clansim"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn check_reports_certification_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let toy = write_cfg(dir.path(), TOY);
    let out = run(&["check", toy.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("alpha = 0.8"), "{text}");
    assert!(text.contains("verdict: certified subcritical"), "{text}");

    let bond = write_cfg(dir.path(), BOND);
    let out = run(&["check", bond.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("verdict: not certified"), "{text}");
}

#[test]
fn sample_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), TOY);
    let out_path = dir.path().join("samples.jsonl");
    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("wrote 50 samples"), "{text}");
    let (header, records) = read_samples(&out_path).unwrap();
    assert_eq!(header.n, 50);
    assert_eq!(header.seed, 21);
    assert_eq!(records.len(), 50);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.index, i as u64);
        assert_eq!(r.model, "toy-hardcore");
        assert!(!r.truncated);
    }
    let ledger = std::fs::read_to_string(ledger_path(&out_path)).unwrap();
    assert_eq!(ledger.lines().count(), 51, "entries plus summary");
}

#[test]
fn sample_n_zero_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), TOY);
    let out_path = dir.path().join("empty.jsonl");
    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--n",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn force_gates_sampling_of_uncertified_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), BOND);
    let out_path = dir.path().join("bond.jsonl");
    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("refusing to sample"), "{text}");
    assert!(!out_path.exists(), "refusal must not write files");

    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--force",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (_, records) = read_samples(&out_path).unwrap();
    assert_eq!(records.len(), 30);
}

#[test]
fn compare_passes_the_samplers_own_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), TOY);
    let out_path = dir.path().join("samples.jsonl");
    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--n",
        "5000",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "compare",
        cfg.to_str().unwrap(),
        "--sample",
        out_path.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("verdict: pass"), "{text}");
}

#[test]
fn baseline_comparison_accepts_the_stationary_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), TOY);
    let samples = dir.path().join("samples.jsonl");
    let baseline = dir.path().join("oracle.jsonl");
    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--n",
        "4000",
        "--out",
        samples.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "oracle",
        cfg.to_str().unwrap(),
        "--n",
        "4000",
        "--out",
        baseline.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(&[
        "compare",
        cfg.to_str().unwrap(),
        "--sample",
        samples.to_str().unwrap(),
        "--baseline",
        baseline.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("verdict: pass"), "{text}");
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &TOY.replace("seed = 21", "sede = 21"));
    let out = run(&["check", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "one diagnostic line: {err}");
    assert!(err.contains("sede"), "{err}");
}

#[test]
fn plot_rejects_an_out_of_range_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), TOY);
    let samples = dir.path().join("samples.jsonl");
    let out = run(&[
        "sample",
        cfg.to_str().unwrap(),
        "--out",
        samples.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let svg = dir.path().join("fig.svg");
    let out = run(&[
        "plot",
        cfg.to_str().unwrap(),
        "--sample",
        samples.to_str().unwrap(),
        "--index",
        "999",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "plot",
        cfg.to_str().unwrap(),
        "--sample",
        samples.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg"), "svg output");
}
