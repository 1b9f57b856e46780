//! Session-scoped assistant.
//!
//! Each accepted action updates the draft and the trace together, then the
//! matcher runs on the trace including that action. Sessions are locked
//! individually; the corpus lock is only held to take a snapshot or to store
//! a completed trace, and is always acquired after a session lock.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clover::TaskModel;
use crate::corpus::{CorpusError, CorpusId, CorpusSnapshot, CorpusStats, CorpusStore};
use crate::matcher::{suggest_next, MatchThresholds, Suggestion};
use crate::schema::{apply_action, validate, SchemaDraft, SchemaError, ValidationReport, Violation};
use crate::trace::{DesignAction, GrossTrace, TraceDocument, TraceError, TraceStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Completed,
    Abandoned,
}

/// Why an action was not applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub code: String,
    pub message: String,
}

impl From<SchemaError> for Rejection {
    fn from(e: SchemaError) -> Self {
        Rejection {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<TraceError> for Rejection {
    fn from(e: TraceError) -> Self {
        Rejection {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// Draft and trace of one session. The draft is always the replay of the
/// trace's events.
#[derive(Debug, Clone)]
pub struct SessionEngine {
    pub status: SessionStatus,
    draft: SchemaDraft,
    trace: GrossTrace,
    last_suggestion: Option<Suggestion>,
}

impl SessionEngine {
    pub fn new(user: &str, session: &str) -> Self {
        SessionEngine {
            status: SessionStatus::Active,
            draft: SchemaDraft::empty(),
            trace: GrossTrace::new(user, session),
            last_suggestion: None,
        }
    }

    pub fn draft(&self) -> &SchemaDraft {
        &self.draft
    }

    pub fn trace(&self) -> &GrossTrace {
        &self.trace
    }

    pub fn last_suggestion(&self) -> Option<&Suggestion> {
        self.last_suggestion.as_ref()
    }

    /// Applies `action` to draft and trace, or to neither.
    pub fn apply(&mut self, action: &DesignAction) -> Result<(), Rejection> {
        let action = action.normalized()?;
        let draft = apply_action(&self.draft, &action)?;
        let event = action.into_event(self.trace.session(), self.trace.len() as u64);
        self.trace.check_event(&event)?;
        self.trace.record_event(event)?;
        self.draft = draft;
        Ok(())
    }

    /// Runs the matcher on the current trace and remembers the result.
    pub fn suggest(&mut self, corpus: &CorpusSnapshot, task_model: &TaskModel, thresholds: &MatchThresholds) -> Suggestion {
        let s = suggest_next(&self.trace, corpus, task_model, thresholds);
        self.last_suggestion = Some(s.clone());
        s
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {session:?} is {status:?}")]
    SessionNotActive { session: String, status: SessionStatus },
    #[error("user must not be empty")]
    EmptyUser,
    #[error("draft is invalid: {} violation(s)", .0.len())]
    InvalidDraft(Vec<Violation>),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::SessionNotActive { .. } => "session_not_active",
            ServiceError::EmptyUser => "empty_user",
            ServiceError::InvalidDraft(_) => "invalid_draft",
            ServiceError::Corpus(_) => "corpus_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventResponse {
    pub applied: bool,
    pub rejection: Option<Rejection>,
    pub validation: ValidationReport,
    pub suggestion: Suggestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session: String,
    pub user: String,
    pub status: SessionStatus,
    pub draft: SchemaDraft,
    pub steps: Vec<TraceStep>,
    pub node_count: usize,
    pub trace: TraceDocument,
    pub last_suggestion: Option<Suggestion>,
}

pub struct AssistantService {
    corpus: Mutex<CorpusStore>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<SessionEngine>>>>,
    next_id: AtomicU64,
    thresholds: MatchThresholds,
    task_model: TaskModel,
}

impl AssistantService {
    pub fn new(corpus: CorpusStore, thresholds: MatchThresholds) -> Self {
        AssistantService {
            corpus: Mutex::new(corpus),
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
            thresholds,
            task_model: TaskModel::canonical(),
        }
    }

    pub fn thresholds(&self) -> &MatchThresholds {
        &self.thresholds
    }

    pub fn snapshot(&self) -> Arc<CorpusSnapshot> {
        self.corpus.lock().expect("corpus lock").snapshot()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEngine>>, ServiceError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn require_active(id: &str, engine: &SessionEngine) -> Result<(), ServiceError> {
        match engine.status {
            SessionStatus::Active => Ok(()),
            status => Err(ServiceError::SessionNotActive {
                session: id.to_string(),
                status,
            }),
        }
    }

    /// Ids are `session-NNNNNN`, counted per service instance.
    pub fn create_session(&self, user: &str) -> Result<String, ServiceError> {
        let user = user.trim();
        if user.is_empty() {
            return Err(ServiceError::EmptyUser);
        }
        let id = format!("session-{:06}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let engine = SessionEngine::new(user, &id);
        self.sessions
            .write()
            .expect("sessions lock")
            .insert(id.clone(), Arc::new(Mutex::new(engine)));
        Ok(id)
    }

    pub fn post_event(&self, id: &str, action: &DesignAction) -> Result<EventResponse, ServiceError> {
        let session = self.session(id)?;
        let mut engine = session.lock().expect("session lock");
        Self::require_active(id, &engine)?;
        match engine.apply(action) {
            Ok(()) => {
                let snapshot = self.snapshot();
                let suggestion = engine.suggest(&snapshot, &self.task_model, &self.thresholds);
                Ok(EventResponse {
                    applied: true,
                    rejection: None,
                    validation: validate(engine.draft()),
                    suggestion,
                })
            }
            Err(rejection) => {
                log::debug!("{id}: rejected {}: {}", rejection.code, rejection.message);
                Ok(EventResponse {
                    applied: false,
                    rejection: Some(rejection),
                    validation: validate(engine.draft()),
                    suggestion: engine.last_suggestion().cloned().unwrap_or_else(Suggestion::no_advice),
                })
            }
        }
    }

    /// Stores the session's trace once its draft validates.
    pub fn complete_session(&self, id: &str) -> Result<CorpusId, ServiceError> {
        let session = self.session(id)?;
        let mut engine = session.lock().expect("session lock");
        Self::require_active(id, &engine)?;
        let report = validate(engine.draft());
        if !report.ok {
            return Err(ServiceError::InvalidDraft(report.violations));
        }
        let corpus_id = self.corpus.lock().expect("corpus lock").store_trace(engine.trace())?;
        engine.status = SessionStatus::Completed;
        Ok(corpus_id)
    }

    pub fn abandon_session(&self, id: &str) -> Result<(), ServiceError> {
        let session = self.session(id)?;
        let mut engine = session.lock().expect("session lock");
        Self::require_active(id, &engine)?;
        engine.status = SessionStatus::Abandoned;
        Ok(())
    }

    pub fn get_state(&self, id: &str) -> Result<SessionState, ServiceError> {
        let session = self.session(id)?;
        let engine = session.lock().expect("session lock");
        let trace = engine.trace();
        Ok(SessionState {
            session: trace.session().to_string(),
            user: trace.user().to_string(),
            status: engine.status,
            draft: engine.draft().clone(),
            steps: trace.linearize(),
            node_count: trace.nodes().len(),
            trace: trace.to_document(),
            last_suggestion: engine.last_suggestion().cloned(),
        })
    }

    pub fn corpus_stats(&self) -> CorpusStats {
        self.snapshot().stats()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clover::ProcessKind;
    use crate::matcher::SuggestionKind;
    use crate::samples;
    use crate::schema::ObjectKind;

    fn service() -> AssistantService {
        AssistantService::new(CorpusStore::in_memory(3), MatchThresholds::default())
    }

    #[test]
    fn sessions_are_distinct() {
        let s = service();
        let a = s.create_session("X").unwrap();
        let b = s.create_session("X").unwrap();
        assert_ne!(a, b);
        assert_eq!(s.get_state(&a).unwrap().node_count, 1);
        assert!(matches!(s.create_session(" "), Err(ServiceError::EmptyUser)));
    }

    #[test]
    fn first_event_on_empty_corpus() {
        let s = service();
        let id = s.create_session("X").unwrap();
        let r = s.post_event(&id, &samples::sale_actions()[0]).unwrap();
        assert!(r.applied);
        assert_eq!(r.suggestion.kind, SuggestionKind::NoAdvice);
    }

    #[test]
    fn rejected_action_changes_nothing() {
        let s = service();
        let id = s.create_session("X").unwrap();
        let actions = samples::sale_actions();
        s.post_event(&id, &actions[0]).unwrap();
        s.post_event(&id, &actions[1]).unwrap();
        let before = s.get_state(&id).unwrap();
        let r = s
            .post_event(&id, &DesignAction::new(ProcessKind::AddFactKey, "K", Some("Sale")))
            .unwrap();
        assert!(!r.applied);
        assert_eq!(r.rejection.unwrap().code, "missing_context");
        assert_eq!(s.get_state(&id).unwrap(), before);
    }

    #[test]
    fn continuation_after_completion() {
        let s = service();
        let x = s.create_session("X").unwrap();
        for a in samples::sale_actions() {
            assert!(s.post_event(&x, &a).unwrap().applied);
        }
        s.complete_session(&x).unwrap();
        assert_eq!(s.corpus_stats().records, 1);
        assert!(matches!(
            s.complete_session(&x),
            Err(ServiceError::SessionNotActive { .. })
        ));

        let y = s.create_session("Y").unwrap();
        let mut last = None;
        for a in &samples::sale_actions()[..13] {
            last = Some(s.post_event(&y, a).unwrap());
        }
        let sug = last.unwrap().suggestion;
        assert_eq!(sug.kind, SuggestionKind::ExactContinuation);
        assert_eq!(sug.proposals[0].next.object, ObjectKind::Link);
        assert_eq!(sug.guidance.unwrap().process, ProcessKind::AddLink);
        assert_eq!(s.get_state(&y).unwrap().steps.len(), 13);
    }

    #[test]
    fn incomplete_star_is_invalid() {
        let s = service();
        let id = s.create_session("X").unwrap();
        for a in &samples::sale_actions()[..13] {
            s.post_event(&id, a).unwrap();
        }
        assert!(matches!(s.complete_session(&id), Err(ServiceError::InvalidDraft(_))));
        assert_eq!(s.get_state(&id).unwrap().status, SessionStatus::Active);
    }

    #[test]
    fn state_after_replay_matches_draft() {
        let s = service();
        let id = s.create_session("X").unwrap();
        for a in samples::sale_actions() {
            s.post_event(&id, &a).unwrap();
        }
        assert_eq!(s.get_state(&id).unwrap().draft, samples::sale_draft());
    }
}
