use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn tracecot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracecot"))
        .args(args)
        .env_remove("TRACECOT_LLM_ENDPOINT")
        .env_remove("TRACECOT_LLM_MODEL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn trace_prints_the_golden_render() {
    let o = tracecot(&["trace", "--program", "base7", "--input", r#"{"num": 100}"#]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(core_dir().join("testdata/golden/base7_num100.trace")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn trace_of_a_source_file_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.py");
    std::fs::write(&path, "def main_solution(x):\n    return x + 1\n").unwrap();
    let o = tracecot(&["trace", "--program", path.to_str().unwrap(), "--input", r#"{"x": 1}"#, "--line-offset", "9"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), ">>> Call to main_solution\n ...... x = 1\n   10 | def main_solution(x):\n   11 |     return x + 1\n <<< Return value from main_solution: 2\n");
}

#[test]
fn bad_input_is_a_pipeline_error() {
    let o = tracecot(&["trace", "--program", "base7", "--input", r#"{"n": 1}"#]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: invalid_input: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn naturalize_prints_numbered_steps() {
    let o = tracecot(&["naturalize", "--program", "josephus", "--input", r#"{"n": 17, "k": 3}"#]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("1. We start main_solution with the input n as 17, k as 3."));
    assert!(out.trim_end().ends_with("**Answer**:\nThe final answer is 11."));
}

#[test]
fn translate_dry_run_shows_the_prompt() {
    let o = tracecot(&["translate", "--program", "base7", "--input", r#"{"num": 5}"#, "--question", "Base 7?", "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("**Question**\n\nBase 7?\n\n**Input**\n\n{'num': 5}"));
    assert!(out.contains("   38 | def main_solution(num):"));
}

#[test]
fn translate_without_endpoint_is_a_config_error() {
    let o = tracecot(&["translate", "--program", "base7", "--input", r#"{"num": 5}"#, "--question", "q"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: gateway_config: "));
}

#[test]
fn empty_corpus_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    let o = tracecot(&["build", "--corpus", corpus.to_str().unwrap(), "--output", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: empty_corpus: "), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(tracecot(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tracecot(&["build", "--variant", "nl"]).status.code(), Some(2));
    assert_eq!(tracecot(&["build", "--mode", "magic"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracecot(&["build", "--variant", "codeio_style", "--mode", "rule_based"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: config_error: "));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "workers = \"many\"\n").unwrap();
    let o = tracecot(&["--config", bad.to_str().unwrap(), "build"]);
    assert_eq!(o.status.code(), Some(3));

    let o = tracecot(&["build", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

fn build_corpus(out: &Path, extra: &[&str]) -> Output {
    let corpus = core_dir().join("testdata/corpus");
    let mut args = vec!["build", "--corpus", corpus.to_str().unwrap(), "--output", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tracecot(&args)
}

#[test]
fn build_then_verify_then_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let o = build_corpus(dir.path(), &["--workers", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(summary["variant"], "ours");
    let dataset = dir.path().join("corpus.ours.jsonl");
    assert!(dataset.exists() && dir.path().join("corpus.ours.manifest.json").exists());
    assert!(dir.path().join("corpus.filter_report.jsonl").exists());

    let report = dir.path().join("report.jsonl");
    let o = tracecot(&["verify", dataset.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&report).unwrap();
    assert!(rows.lines().all(|l| l.contains("\"output_correct\":true")));

    let text = std::fs::read_to_string(&dataset).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut row: serde_json::Value = serde_json::from_str(&lines[5]).unwrap();
    let target = row["record_id"].as_str().unwrap().to_string();
    let out = row["meta"]["output"].as_str().unwrap().to_string();
    row["meta"]["output"] = serde_json::Value::String(out + "1");
    lines[5] = row.to_string();
    std::fs::write(&dataset, lines.join("\n") + "\n").unwrap();

    let o = tracecot(&["verify", dataset.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: verification_failed: "), "{err}");
    assert!(err.contains(&target));
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let corpus = core_dir().join("testdata/corpus");
    std::fs::write(
        &cfg,
        format!(
            "corpus_dir = {:?}\noutput_dir = {:?}\nvariants = [\"raw_trace\"]\nworkers = 2\n\n[filter]\nmax_trace_lines = 40\n",
            corpus.to_str().unwrap(),
            dir.path().join("out").to_str().unwrap()
        ),
    )
    .unwrap();
    let o = tracecot(&["--config", cfg.to_str().unwrap(), "build"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(line["variant"], "raw_trace");
    assert!(line["rejections"]["trace_too_long"].as_u64().unwrap() > 0);

    let o = tracecot(&["--config", cfg.to_str().unwrap(), "build", "--max-trace-lines", "300", "--variant", "code_gen"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(line["variant"], "code_gen");
    assert!(line["rejections"].get("trace_too_long").is_none());
}

#[test]
fn repeated_builds_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(build_corpus(a.path(), &["--variant", "ours", "--variant", "raw_trace"]).status.success());
    assert!(build_corpus(b.path(), &["--variant", "ours", "--variant", "raw_trace", "--workers", "5"]).status.success());
    for name in ["corpus.ours.jsonl", "corpus.ours.manifest.json", "corpus.raw_trace.jsonl", "corpus.filter_report.jsonl"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn filter_command_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = core_dir().join("testdata/corpus");
    let o = tracecot(&["filter", "--corpus", corpus.to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["submitted"], 27);
    assert_eq!(v["accepted"], 26);
    assert_eq!(v["rejections"]["execution_failed"], 1);
}

#[test]
fn stats_over_completions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(
        &path,
        "{\"text\": \"a b c\", \"finish_reason\": \"stop\"}\n{\"text\": \"a b\", \"finish_reason\": \"length\"}\n",
    )
    .unwrap();
    let o = tracecot(&["stats", path.to_str().unwrap(), "--max-tokens", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["average_tokens"], 2.5);
    assert_eq!(v["max_reached_count"], 1);

    std::fs::write(&path, "").unwrap();
    let o = tracecot(&["stats", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: empty_sample: "));
}
