use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_impact-rank"));
    c.env_remove("IMPACT_RANK_CACHE");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn impact-rank")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn corpus(dir: &Path) -> PathBuf {
    ok(dir, &["synth", "--scholars", "150", "--seed", "3", "--out", "c.bin"]);
    dir.join("c.bin")
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(run(dir.path(), &["percentile", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["percentile", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["predict", "--corpus", "c.bin", "--task", "nope", "--out", "r.csv"]).status.code(), Some(2));
}

#[test]
fn failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["percentile", "--corpus", "missing.bin", "--out", "p.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    std::fs::write(dir.path().join("bad.jsonl"), "{\"scholar_id\": 3}\n").unwrap();
    let out = run(dir.path(), &["ingest", "--input", "bad.jsonl", "--format", "jsonl", "--out", "c.bin"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    corpus(dir.path());
    let out = run(dir.path(), &["percentile", "--corpus", "c.bin", "--metric", "p7-mode", "--out", "p.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    for tag in ["a", "b"] {
        ok(d, &["percentile", "--corpus", "c.bin", "--metric", "h-index", "--out", &format!("p_{tag}.csv")]);
        ok(
            d,
            &["predict", "--corpus", "c.bin", "--task", "scholar", "--t1", "5", "--t2", "9", "--out", &format!("r_{tag}.csv")],
        );
        ok(d, &["stationarity", "--corpus", "c.bin", "--out", &format!("s_{tag}.csv")]);
    }
    for stem in ["p", "r", "s"] {
        let a = std::fs::read(d.join(format!("{stem}_a.csv"))).unwrap();
        let b = std::fs::read(d.join(format!("{stem}_b.csv"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{stem} differs between runs");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("r_a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["outputs"].as_object().unwrap().len(), 1);
    assert_eq!(manifest["corpus_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn cache_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    let args = ["percentile", "--corpus", "c.bin", "--ages", "1..12"];
    ok(d, &[&args[..], &["--out", "plain.csv"]].concat());
    for name in ["cold.csv", "warm.csv"] {
        let out = bin()
            .current_dir(d)
            .env("IMPACT_RANK_CACHE", d.join("cache"))
            .args(args)
            .args(["--out", name])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let plain = std::fs::read(d.join("plain.csv")).unwrap();
    assert_eq!(std::fs::read(d.join("cold.csv")).unwrap(), plain);
    assert_eq!(std::fs::read(d.join("warm.csv")).unwrap(), plain);
    assert_eq!(std::fs::read_dir(d.join("cache")).unwrap().count(), 12);
}

#[test]
fn jobs_do_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    for jobs in ["1", "3"] {
        ok(
            d,
            &["--jobs", jobs, "stability", "--corpus", "c.bin", "--metric", "citations", "--out", &format!("m{jobs}.csv")],
        );
    }
    assert_eq!(std::fs::read(d.join("m1.csv")).unwrap(), std::fs::read(d.join("m3.csv")).unwrap());
}

#[test]
fn percentile_csv_feeds_stability_and_stationarity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(d, &["percentile", "--corpus", "c.bin", "--out", "p.csv"]);
    ok(d, &["stability", "--corpus", "c.bin", "--out", "direct.csv"]);
    ok(d, &["stability", "--percentiles", "p.csv", "--out", "from_csv.csv"]);
    assert_eq!(std::fs::read(d.join("direct.csv")).unwrap(), std::fs::read(d.join("from_csv.csv")).unwrap());

    ok(d, &["stationarity", "--percentiles", "p.csv", "--difference-from", "5", "--out", "s.csv"]);
    let text = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert!(text.starts_with("entity_id,test,series,statistic,critical_5pct,reject,length,degenerate"));
    for series in ["level", "diff", "delta"] {
        assert!(text.lines().any(|l| l.split(',').nth(2) == Some(series)));
    }
}

#[test]
fn report_summarizes_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(
        d,
        &[
            "predict", "--corpus", "c.bin", "--task", "pub", "--t1", "5", "--t2", "8", "--models", "baseline,ridge", "--out",
            "r.csv",
        ],
    );
    let header = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(header.starts_with("model,t1,t2,r2,rmse,medse,mae,n_train,n_test"));
    let out = run(d, &["report", "--results", "r.csv"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["tasks"].as_array().unwrap().len(), 1);
    assert_eq!(report["tasks"][0]["task"], "pub");
    assert_eq!(report["models"]["ridge"]["tasks"], 1);
}
