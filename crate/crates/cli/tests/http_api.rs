mod common;

use std::sync::Arc;

use axum::http::{Method, StatusCode};
use clover_cli::http::{router, Completed, ErrorBody, SessionCreated};
use clover_core::clover::ProcessKind;
use clover_core::samples;
use clover_core::{AssistantService, CorpusStats, CorpusStore, DesignAction, EventResponse, MatchThresholds, SessionState, SuggestionKind};
use common::Client;
use serde_json::json;

fn client() -> Client {
    let svc = AssistantService::new(CorpusStore::in_memory(3), MatchThresholds::default());
    Client::new(router(Arc::new(svc)))
}

fn create(c: &Client, user: &str) -> String {
    let (status, body): (_, SessionCreated) = c.post("/sessions", &json!({ "user": user }));
    assert_eq!(status, StatusCode::CREATED);
    body.session
}

#[test]
fn health() {
    let (status, body): (_, serde_json::Value) = client().get("/health");
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok" }));
}

#[test]
fn session_lifecycle() {
    let c = client();
    let x = create(&c, "X");
    assert_eq!(x, "session-000001");
    for a in samples::sale_actions() {
        let (status, r): (_, EventResponse) = c.post(&format!("/sessions/{x}/events"), &a);
        assert_eq!(status, StatusCode::OK);
        assert!(r.applied);
    }
    let (status, done): (_, Completed) = c.post(&format!("/sessions/{x}/complete"), &json!({}));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(done.corpus_id.as_str().len(), 64);

    let (_, stats): (_, CorpusStats) = c.get("/corpus/stats");
    assert_eq!(stats.records, 1);

    let y = create(&c, "Y");
    let mut last = None;
    for a in &samples::sale_actions()[..13] {
        let (_, r): (_, EventResponse) = c.post(&format!("/sessions/{y}/events"), a);
        last = Some(r.suggestion);
    }
    let s = last.unwrap();
    assert_eq!(s.kind, SuggestionKind::ExactContinuation);
    assert_eq!(s.proposals[0].next.process, ProcessKind::AddLink);

    let (status, state): (_, SessionState) = c.get(&format!("/sessions/{y}"));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state.steps.len(), 13);
    assert_eq!(state.node_count, 27);
}

#[test]
fn rejected_event_is_reported_not_recorded() {
    let c = client();
    let s = create(&c, "U");
    let orphan = DesignAction::new(ProcessKind::AddFactKey, "Id", Some("Missing"));
    let (status, r): (_, EventResponse) = c.post(&format!("/sessions/{s}/events"), &orphan);
    assert_eq!(status, StatusCode::OK);
    assert!(!r.applied);
    assert!(r.rejection.is_some());
    let (_, state): (_, SessionState) = c.get(&format!("/sessions/{s}"));
    assert!(state.steps.is_empty());
}

#[test]
fn error_statuses() {
    let c = client();
    let (status, e): (_, ErrorBody) = c.get("/sessions/session-999999");
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(e.error, "unknown_session");

    let (status, e): (_, ErrorBody) = c.post("/sessions", &json!({ "user": "  " }));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(e.error, "empty_user");

    // A draft with no model cannot be stored.
    let s = create(&c, "U");
    let (status, e): (_, ErrorBody) = c.post(&format!("/sessions/{s}/complete"), &json!({}));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(!e.violations.is_empty());

    let t = create(&c, "U");
    for a in samples::sale_actions() {
        let _: (_, EventResponse) = c.post(&format!("/sessions/{t}/events"), &a);
    }
    let (status, _): (_, Completed) = c.post(&format!("/sessions/{t}/complete"), &json!({}));
    assert_eq!(status, StatusCode::OK);
    let (status, e): (_, ErrorBody) = c.post(&format!("/sessions/{t}/events"), &samples::sale_actions()[0]);
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(e.error, "session_not_active");
}

#[test]
fn malformed_bodies_are_client_errors() {
    let c = client();
    let s = create(&c, "U");
    let (status, _) = c.send(Method::POST, &format!("/sessions/{s}/events"), Some("{\"process\":".into()));
    assert!(status.is_client_error());
    let (status, _) = c.send(Method::POST, &format!("/sessions/{s}/events"), Some("{\"process\":\"nosuch\",\"label\":\"x\"}".into()));
    assert!(status.is_client_error());
    let (status, _) = c.send(Method::GET, "/nowhere", None);
    assert_eq!(status, StatusCode::NOT_FOUND);
}
