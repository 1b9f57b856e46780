//! Subcommand bodies. Each returns its stdout text so tests can call them
//! without spawning the binary.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clover_core::dot::to_dot;
use clover_core::script::TranscriptStep;
use clover_core::trace::{self, GrossTrace};
use clover_core::{
    eval_leave_one_out, load_corpus, replay_script, AssistantService, CorpusSnapshot, CorpusStore, EvalReport,
    SessionScript, SuggestionKind, TaskModel,
};
use serde::Serialize;

use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    JsonLines,
}

/// Stdout text plus whether the command succeeded.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub success: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, success: true }
    }
}

fn json_line(out: &mut String, value: &impl Serialize) {
    out.push_str(&serde_json::to_string(value).expect("output serializes"));
    out.push('\n');
}

fn corpus_dir(cfg: &Config) -> Result<&Path> {
    cfg.corpus_dir
        .as_deref()
        .context("no corpus directory: pass --corpus or set DWCLOVER_CORPUS")
}

fn read_trace(path: &Path) -> Result<GrossTrace> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    trace::deserialize(&text).with_context(|| format!("{}", path.display()))
}

fn read_snapshot(cfg: &Config) -> Result<CorpusSnapshot> {
    let dir = corpus_dir(cfg)?;
    let (snap, report) = load_corpus(dir, cfg.thresholds.min_nodes)?;
    for e in &report.errors {
        log::warn!("{e}");
    }
    Ok(snap)
}

/// Opens the configured corpus directory, or an empty in-memory corpus.
pub fn open_store(cfg: &Config) -> Result<CorpusStore> {
    match &cfg.corpus_dir {
        Some(dir) => {
            let (store, report) = CorpusStore::open(dir, cfg.thresholds.min_nodes)?;
            for e in &report.errors {
                log::warn!("{e}");
            }
            Ok(store)
        }
        None => Ok(CorpusStore::in_memory(cfg.thresholds.min_nodes)),
    }
}

fn describe_step(s: &TranscriptStep) -> String {
    let a = &s.action;
    let mut line = format!("{:>3} {} {:?}", s.step, a.process, a.label);
    match &s.rejection {
        Some(r) => {
            let _ = write!(line, " rejected [{}] {}", r.code, r.message);
        }
        None => {
            let sug = &s.suggestion;
            let kind = match sug.kind {
                SuggestionKind::ExactContinuation => "continue",
                SuggestionKind::Candidates => "candidates",
                SuggestionKind::NoAdvice => "no advice",
            };
            let _ = write!(line, " -> {kind}");
            for p in &sug.proposals {
                let _ = write!(line, " | {} {:.2} {}", p.next.process, p.score, p.suggested_label);
            }
        }
    }
    line
}

pub struct ReplayOptions {
    pub commit: bool,
    pub trace_out: Option<PathBuf>,
}

/// Replays a script in-process. The corpus is only written with `commit`,
/// after every action applied and the draft validated.
pub fn replay(cfg: &Config, script_path: &Path, opts: &ReplayOptions, format: Format) -> Result<Output> {
    let text = std::fs::read_to_string(script_path).with_context(|| format!("reading {}", script_path.display()))?;
    let script = SessionScript::parse(&text).with_context(|| format!("{}", script_path.display()))?;
    let service = AssistantService::new(open_store(cfg)?, cfg.thresholds);
    let transcript = replay_script(&service, &script)?;

    let mut out = String::new();
    for step in &transcript.steps {
        match format {
            Format::Text => {
                out.push_str(&describe_step(step));
                out.push('\n');
            }
            Format::JsonLines => json_line(&mut out, step),
        }
    }
    if let Some(path) = &opts.trace_out {
        std::fs::write(path, &transcript.trace).with_context(|| format!("writing {}", path.display()))?;
    }
    let success = transcript.all_applied();
    if opts.commit && success {
        let id = service.complete_session(&transcript.session)?;
        match format {
            Format::Text => {
                let _ = writeln!(out, "stored {id}");
            }
            Format::JsonLines => json_line(&mut out, &serde_json::json!({ "stored": id })),
        }
    }
    Ok(Output { text: out, success })
}

pub fn eval(cfg: &Config, format: Format) -> Result<Output> {
    let snap = read_snapshot(cfg)?;
    let report = eval_leave_one_out(&snap, &cfg.thresholds, &TaskModel::canonical())?;
    Ok(Output::ok(render_eval(&report, format)))
}

pub fn render_eval(report: &EvalReport, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::JsonLines => json_line(&mut out, report),
        Format::Text => {
            let acc = |a: Option<f64>| a.map_or("-".to_string(), |a| format!("{a:.3}"));
            let _ = writeln!(
                out,
                "sessions {}  points {}  hits {}  misses {}  no-advice {}  accuracy {}",
                report.sessions,
                report.points,
                report.hits,
                report.misses,
                report.no_advice,
                acc(report.accuracy)
            );
            out.push_str("position  points  hits  misses  no-advice  accuracy\n");
            for (pos, p) in &report.per_position {
                let _ = writeln!(
                    out,
                    "{pos:>8}  {:>6}  {:>4}  {:>6}  {:>9}  {}",
                    p.points,
                    p.hits,
                    p.misses,
                    p.no_advice,
                    acc(p.accuracy())
                );
            }
        }
    }
    out
}

pub fn export_dot(trace_path: &Path) -> Result<Output> {
    Ok(Output::ok(to_dot(&read_trace(trace_path)?)))
}

pub fn corpus_add(cfg: &Config, files: &[PathBuf], format: Format) -> Result<Output> {
    let dir = corpus_dir(cfg)?;
    let (mut store, _) = CorpusStore::open(dir, cfg.thresholds.min_nodes)?;
    let mut out = String::new();
    let mut success = true;
    for f in files {
        let stored = read_trace(f).and_then(|t| Ok(store.store_trace(&t)?));
        match (stored, format) {
            (Ok(id), Format::Text) => {
                let _ = writeln!(out, "{id}  {}", f.display());
            }
            (Ok(id), Format::JsonLines) => json_line(&mut out, &serde_json::json!({ "file": f, "corpus_id": id })),
            (Err(e), _) => {
                log::error!("{}: {e:#}", f.display());
                success = false;
            }
        }
    }
    Ok(Output { text: out, success })
}

pub fn corpus_stats(cfg: &Config, format: Format) -> Result<Output> {
    let stats = read_snapshot(cfg)?.stats();
    let mut out = String::new();
    match format {
        Format::JsonLines => json_line(&mut out, &stats),
        Format::Text => {
            let _ = writeln!(out, "records {}", stats.records);
            for (group, counts) in [("domain", &stats.domains), ("model", &stats.models), ("level", &stats.levels)] {
                for (k, v) in counts {
                    let _ = writeln!(out, "{group} {k} {v}");
                }
            }
        }
    }
    Ok(Output::ok(out))
}

pub async fn serve(cfg: &Config) -> Result<()> {
    let service = Arc::new(AssistantService::new(open_store(cfg)?, cfg.thresholds));
    let listener = tokio::net::TcpListener::bind(&cfg.listen)
        .await
        .with_context(|| format!("binding {}", cfg.listen))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, crate::http::router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

