mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use common::repo_root;

fn cid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cid")).args(args).output().unwrap()
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    cid(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

#[test]
fn bundled_configs_run_end_to_end() {
    let configs = repo_root().join("configs");
    let mut names: Vec<_> = fs::read_dir(&configs)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    assert!(names.len() >= 3);
    for config in names {
        let out = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let o = run_config(&config, out.path(), &[]);
        assert!(start.elapsed() < Duration::from_secs(60));
        assert!(o.status.success(), "{}: {}", config.display(), String::from_utf8_lossy(&o.stderr));
        let written: Vec<_> = walk(out.path());
        assert_eq!(written.len(), 2, "{written:?}");
    }
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn election_verdict() {
    let out = tempfile::tempdir().unwrap();
    let o = run_config(&repo_root().join("configs/figure2_election.json"), out.path(), &[]);
    assert!(o.status.success());
    let v = stdout(&o);
    assert!(
        v.starts_with("challenger; change points ≈ [0.86, 0.88], [2.60, 2.62]"),
        "{v}"
    );
    assert!(v.contains("min CID in plausible region"));
    let csv = fs::read_to_string(out.path().join("out/figure2_election.csv")).unwrap();
    assert!(csv.starts_with("t,estimate,lo,hi,decision,d_t,j_t,cid\n"));
    assert_eq!(csv.lines().count(), 402);
}

#[test]
fn accordion_verdict() {
    let out = tempfile::tempdir().unwrap();
    let o = run_config(&repo_root().join("configs/figure3a_accordion.json"), out.path(), &[]);
    assert!(o.status.success());
    let v = stdout(&o);
    assert!(v.starts_with("intervene; change point ≈ [0.40, 0.45]"), "{v}");
    assert!(v.contains("expected CID"));
}

#[test]
fn reruns_are_byte_identical() {
    let config = repo_root().join("configs/figure3b_parametric.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_config(&config, a.path(), &["--seed", "17"]).status.success());
    assert!(run_config(&config, b.path(), &["--seed", "17"]).status.success());
    for name in ["out/figure3b_parametric.csv", "out/figure3b_parametric.svg"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn seed_and_grid_overrides_apply() {
    let config = repo_root().join("configs/figure3a_accordion.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_config(&config, a.path(), &["--seed", "1", "--grid-step", "0.5"]).status.success());
    assert!(run_config(&config, b.path(), &["--seed", "2", "--grid-step", "0.5"]).status.success());
    let csv_a = fs::read_to_string(a.path().join("out/figure3a_accordion.csv")).unwrap();
    let csv_b = fs::read_to_string(b.path().join("out/figure3a_accordion.csv")).unwrap();
    assert_eq!(csv_a.lines().count(), 14);
    assert_ne!(csv_a, csv_b);
    let o = run_config(&config, a.path(), &["--grid-step=-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"dataset": "x.csv", "lead": {"n_total": 10, "mechanism": [1, 1, 1, 0, 0, 0, 0]}}"#).unwrap();
    let o = run_config(&bad, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lead.mechanism"));
    let o = run_config(&dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unreadable_dataset_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(
        &config,
        r#"{"dataset": "nope/hibbs.csv", "outputs": {"csv": "a.csv", "svg": "a.svg"}, "election": {"x0": 0}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run_config(&config, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists() || walk(&out).is_empty());
}

#[test]
fn mechanisms_subcommand_lists_builtins() {
    let o = cid(&["mechanisms"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("accordion\t1,1,1,0,0,0,0,0,0,0"));
    assert!(text.contains("parametric\t1,0.9,0.8,0.6,0.4,0,0,0,-0.2,-0.25"));
}
