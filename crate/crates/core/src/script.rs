//! Scripted sessions.
//!
//! A script is a user plus the events array of a trace document without
//! `seq` fields; sequence numbers are assigned on replay.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clover::ProcessKind;
use crate::matcher::Suggestion;
use crate::service::{AssistantService, Rejection, ServiceError};
use crate::trace::{self, DesignAction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionScript {
    pub user: String,
    pub events: Vec<DesignAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("script parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

impl SessionScript {
    pub fn new(user: impl Into<String>, events: Vec<DesignAction>) -> Self {
        SessionScript {
            user: user.into(),
            events,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        serde_json::from_str(text).map_err(|e| ScriptError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("script serializes");
        out.push('\n');
        out
    }

    /// Label of the first domain selection.
    pub fn domain(&self) -> Option<&str> {
        self.label_of(ProcessKind::SelectDomain)
    }

    /// Label of the first model selection.
    pub fn model(&self) -> Option<&str> {
        self.label_of(ProcessKind::SelectModel)
    }

    fn label_of(&self, process: ProcessKind) -> Option<&str> {
        self.events
            .iter()
            .find(|a| a.process == process)
            .map(|a| a.label.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    /// 1-based position in the script.
    pub step: usize,
    pub action: DesignAction,
    pub applied: bool,
    pub rejection: Option<Rejection>,
    pub suggestion: Suggestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub session: String,
    pub steps: Vec<TranscriptStep>,
    /// Canonical trace document after the last step.
    pub trace: String,
}

impl Transcript {
    pub fn all_applied(&self) -> bool {
        self.steps.iter().all(|s| s.applied)
    }

    pub fn suggestions(&self) -> impl Iterator<Item = &Suggestion> {
        self.steps.iter().map(|s| &s.suggestion)
    }
}

/// Runs every action of `script` through a new session of `service`.
/// Rejected actions are recorded and replay continues.
pub fn replay_script(service: &AssistantService, script: &SessionScript) -> Result<Transcript, ServiceError> {
    let session = service.create_session(&script.user)?;
    let mut steps = Vec::with_capacity(script.events.len());
    for (i, action) in script.events.iter().enumerate() {
        let r = service.post_event(&session, action)?;
        steps.push(TranscriptStep {
            step: i + 1,
            action: action.clone(),
            applied: r.applied,
            rejection: r.rejection,
            suggestion: r.suggestion,
        });
    }
    let state = service.get_state(&session)?;
    Ok(Transcript {
        session,
        steps,
        trace: trace::serialize_document(&state.trace),
    })
}
