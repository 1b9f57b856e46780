use std::path::Path;
use std::process::{Command, Output};

use clover_core::clover::ProcessKind;
use clover_core::samples;
use clover_core::trace::{self, DesignAction};
use clover_core::SessionScript;

fn clover(corpus: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clover"))
        .env_remove("DWCLOVER_CONFIG")
        .arg("--corpus")
        .arg(corpus)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn replay_commit_then_continue() {
    let corpus = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let full = work.path().join("full.json");
    std::fs::write(&full, SessionScript::new("X", samples::sale_actions()).to_json()).unwrap();
    let o = clover(corpus.path(), &["replay", full.to_str().unwrap(), "--commit"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("stored "));
    assert_eq!(files(corpus.path()).iter().filter(|f| f.ends_with(".trace")).count(), 1);

    let part = work.path().join("part.json");
    std::fs::write(&part, SessionScript::new("Y", samples::sale_actions()[..13].to_vec()).to_json()).unwrap();
    let trace_out = work.path().join("y.trace");
    let o = clover(
        corpus.path(),
        &["--format", "json-lines", "replay", part.to_str().unwrap(), "--trace-out", trace_out.to_str().unwrap()],
    );
    assert!(o.status.success());
    let last: serde_json::Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(last["suggestion"]["kind"], "exact_continuation");
    let t = trace::deserialize(&std::fs::read_to_string(&trace_out).unwrap()).unwrap();
    assert_eq!(t.events().len(), 13);

    let o = clover(corpus.path(), &["--format", "json-lines", "corpus", "stats"]);
    let stats: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(stats["records"], 1);
}

#[test]
fn rejected_action_exits_one_and_stores_nothing() {
    let corpus = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let mut actions = samples::sale_actions();
    actions.insert(3, DesignAction::new(ProcessKind::AddFactKey, "Id", Some("Nowhere")));
    let script = work.path().join("s.json");
    std::fs::write(&script, SessionScript::new("X", actions).to_json()).unwrap();
    let o = clover(corpus.path(), &["replay", script.to_str().unwrap(), "--commit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("rejected"));
    assert!(files(corpus.path()).iter().all(|f| !f.ends_with(".trace")));
}

#[test]
fn malformed_script_exits_two_and_leaves_corpus_alone() {
    let corpus = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let script = work.path().join("bad.json");
    std::fs::write(&script, "{\"user\": \"X\",\n \"events\": [ {\"process\": \"selectdomain\"\n").unwrap();
    let o = clover(corpus.path(), &["replay", script.to_str().unwrap(), "--commit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    assert!(files(corpus.path()).is_empty());
}

#[test]
fn corpus_add_and_export_dot() {
    let corpus = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let t = work.path().join("sale.trace");
    std::fs::write(&t, trace::serialize(&samples::sale_trace("X", "s1"))).unwrap();
    let o = clover(corpus.path(), &["corpus", "add", t.to_str().unwrap()]);
    assert!(o.status.success());
    let o2 = clover(corpus.path(), &["corpus", "add", t.to_str().unwrap()]);
    assert_eq!(stdout(&o), stdout(&o2), "storing twice yields the same id");

    let o = clover(corpus.path(), &["export-dot", t.to_str().unwrap()]);
    assert!(o.status.success());
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("[shape=").count(), 31);
}

#[test]
fn eval_needs_two_records() {
    let corpus = tempfile::tempdir().unwrap();
    let o = clover(corpus.path(), &["eval"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_threshold_flag_is_rejected() {
    let corpus = tempfile::tempdir().unwrap();
    let o = clover(corpus.path(), &["--min-similarity", "1.5", "corpus", "stats"]);
    assert_eq!(o.status.code(), Some(2));
}
