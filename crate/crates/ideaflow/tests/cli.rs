//! Integration tests for the `ideaflow` binary: subcommand surface, exit
//! codes (0 success, 2 validation, 3 backend failure), and artifact layout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ideaflow"))
}

fn fixture_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus_10.jsonl")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn ingest_succeeds_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["ingest", "--corpus"])
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("nodes: 10"), "{text}");
    assert!(text.contains("edges:"), "{text}");
    assert!(text.contains("Citation") || text.contains("FeatureOverlap"), "{text}");

    let first = fs::read(dir.path().join("graph.json")).unwrap();
    let out2 = bin()
        .args(["ingest", "--corpus"])
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out2.status.success());
    assert_eq!(first, fs::read(dir.path().join("graph.json")).unwrap());
}

#[test]
fn ingest_of_empty_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.jsonl");
    fs::write(&corpus, "{\"dim\": 4}\n").unwrap();
    let out = bin()
        .args(["ingest", "--corpus"])
        .arg(&corpus)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn explore_with_single_iteration_writes_one_reward_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    fs::write(
        &config,
        "seed = 3\n[exploration]\nk = 2\nn_min = 1\nn_max = 1\n",
    )
    .unwrap();
    let ok = bin()
        .args(["ingest", "--corpus"])
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success());
    let out = bin()
        .args(["explore", "--query", "single step", "--graph"])
        .arg(dir.path().join("graph.json"))
        .arg("--corpus")
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("exploration_rewards.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one row: {csv}");
    assert_eq!(lines[0], "iteration,reward,running_variance");
}

#[test]
fn full_run_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    fs::write(
        &config,
        "seed = 11\n[exploration]\nk = 3\nn_min = 4\nn_max = 6\n[evolution]\npopulation_size = 4\nt_max = 3\nstd_threshold = 1e-12\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--query", "coordinated machines", "--corpus"])
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    for f in [
        "graph.json",
        "config_resolved.toml",
        "trajectories.jsonl",
        "search_tree.json",
        "exploration_rewards.csv",
        "initial_population.json",
        "evolution_rewards.csv",
        "diversity.json",
        "combined_rewards.csv",
    ] {
        assert!(dir.path().join(f).exists(), "missing artifact {f}");
    }

    let ranks = dir.path().join("ranks.json");
    fs::write(&ranks, r#"{"n": 3, "ranks": [4, 1]}"#).unwrap();
    let report = bin()
        .args(["report", "--run"])
        .arg(dir.path())
        .arg("--ranks")
        .arg(&ranks)
        .output()
        .unwrap();
    assert!(report.status.success(), "{}", stderr(&report));
    let text = stdout(&report);
    assert!(text.contains("diversity_score"), "{text}");
    assert!(text.contains("insight_score: 0.5"), "{text}");
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn missing_graph_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["explore", "--query", "q", "--graph"])
        .arg(dir.path().join("nope.json"))
        .arg("--corpus")
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unreachable_remote_backend_exits_3_with_failed_marker() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    // port 9 is the discard service; nothing listens there in the sandbox
    let remote = "kind = \"remote\"\nbase_url = \"http://127.0.0.1:9/v1\"\nmodel_name = \"m\"\ntimeout_secs = 1.0\nmax_retries = 1\nbackoff_base_secs = 0.001\n";
    fs::write(
        &config,
        format!(
            "seed = 1\n[backends.generator]\n{remote}[backends.reward]\n{remote}[backends.embedder]\n{remote}"
        ),
    )
    .unwrap();
    let ok = bin()
        .args(["ingest", "--corpus"])
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", stderr(&ok));
    let out = bin()
        .args(["explore", "--query", "q", "--graph"])
        .arg(dir.path().join("graph.json"))
        .arg("--corpus")
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(dir.path().join("FAILED").exists(), "FAILED marker missing");
}

#[test]
fn backend_flag_overrides_config_kind() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    // remote config everywhere, but --backend mock forces the offline path
    let remote = "kind = \"remote\"\nbase_url = \"http://127.0.0.1:9/v1\"\nmodel_name = \"m\"\ntimeout_secs = 1.0\nmax_retries = 1\n";
    fs::write(
        &config,
        format!(
            "seed = 1\n[exploration]\nk = 2\nn_min = 1\nn_max = 1\n[backends.generator]\n{remote}[backends.reward]\n{remote}[backends.embedder]\n{remote}"
        ),
    )
    .unwrap();
    let ok = bin()
        .args(["ingest", "--corpus"])
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success());
    let out = bin()
        .args(["explore", "--query", "q", "--backend", "mock", "--graph"])
        .arg(dir.path().join("graph.json"))
        .arg("--corpus")
        .arg(fixture_corpus())
        .arg("--output")
        .arg(dir.path())
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
}
