//! Gross traces: a session's events aggregated into one chronologically
//! ordered concrete graph.
//!
//! Node timestamps are logical ticks. The user node sits at tick 0 and event
//! `seq` instantiates its process at `2 * seq + 1` and its object at
//! `2 * seq + 2`, so a node's id equals its timestamp.
//!
//! The interchange format is the trace document:
//!
//! ```text
//! {"events": [{"context": ..., "label": ..., "object": ..., "process": ..., "seq": 0}],
//!  "format_version": 1, "session": "...", "user": "..."}
//! ```
//!
//! Keys are written in sorted order and pretty-printed, so serialization is
//! byte-stable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clover::{
    AbstractNode, CloverError, ConcreteNode, Edge, EdgeKind, NodeId, ProcessKind, UseModel,
};
use crate::schema::{normalize_name, ObjectKind, SchemaError};

pub const FORMAT_VERSION: u32 = 1;

/// The payload of a design event, without session bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignAction {
    pub process: ProcessKind,
    pub object: ObjectKind,
    pub label: String,
    #[serde(default)]
    pub context: Option<String>,
}

impl DesignAction {
    /// Builds an action with the object implied by `process`.
    pub fn new(process: ProcessKind, label: impl Into<String>, context: Option<&str>) -> Self {
        DesignAction {
            process,
            object: process.object(),
            label: label.into(),
            context: context.map(str::to_string),
        }
    }

    /// Checks the pairing and trims the label and context.
    pub fn normalized(&self) -> Result<Self, SchemaError> {
        if self.process.object() != self.object {
            return Err(SchemaError::IllegalPairing {
                process: self.process,
                object: self.object,
            });
        }
        Ok(DesignAction {
            process: self.process,
            object: self.object,
            label: normalize_name(&self.label)?,
            context: self
                .context
                .as_deref()
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(str::to_string),
        })
    }

    pub fn into_event(self, session: &str, seq: u64) -> DesignEvent {
        DesignEvent {
            session: session.to_string(),
            seq,
            process: self.process,
            object: self.object,
            label: self.label,
            context: self.context,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignEvent {
    pub session: String,
    pub seq: u64,
    pub process: ProcessKind,
    pub object: ObjectKind,
    pub label: String,
    pub context: Option<String>,
}

impl DesignEvent {
    pub fn action(&self) -> DesignAction {
        DesignAction {
            process: self.process,
            object: self.object,
            label: self.label.clone(),
            context: self.context.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("expected event seq {expected}, got {got}")]
    SeqGap { expected: u64, got: u64 },
    #[error("process {process} cannot manipulate object {object}")]
    IllegalPairing { process: ProcessKind, object: ObjectKind },
    #[error(transparent)]
    OrphanContext(#[from] CloverError),
    #[error("event belongs to session {got:?}, trace is {expected:?}")]
    SessionMismatch { expected: String, got: String },
    #[error("event {0} has an empty label")]
    EmptyLabel(u64),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u32),
}

impl TraceError {
    pub fn code(&self) -> &'static str {
        match self {
            TraceError::SeqGap { .. } => "seq_gap",
            TraceError::IllegalPairing { .. } => "illegal_pairing",
            TraceError::OrphanContext(_) => "orphan_context",
            TraceError::SessionMismatch { .. } => "session_mismatch",
            TraceError::EmptyLabel(_) => "empty_label",
            TraceError::Parse { .. } => "parse_error",
            TraceError::UnsupportedVersion(_) => "unsupported_version",
        }
    }
}

/// One step of a linearized trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub seq: u64,
    pub process: ProcessKind,
    pub object: ObjectKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrossTrace {
    user: String,
    session: String,
    events: Vec<DesignEvent>,
    nodes: Vec<ConcreteNode>,
    edges: Vec<Edge>,
    use_model: UseModel,
}

impl GrossTrace {
    /// A trace holding only the user node at tick 0.
    pub fn new(user: impl Into<String>, session: impl Into<String>) -> Self {
        let user = user.into();
        let session = session.into();
        let user_node = ConcreteNode {
            id: NodeId(0),
            abstract_node: AbstractNode::USER,
            label: user.clone(),
            timestamp: 0,
            session: session.clone(),
        };
        GrossTrace {
            user,
            session,
            events: Vec::new(),
            nodes: vec![user_node],
            edges: Vec::new(),
            use_model: UseModel::default(),
        }
    }

    /// Replays `events` onto a fresh trace.
    pub fn from_events(
        user: impl Into<String>,
        session: impl Into<String>,
        events: impl IntoIterator<Item = DesignEvent>,
    ) -> Result<Self, TraceError> {
        let mut trace = GrossTrace::new(user, session);
        for e in events {
            trace.record_event(e)?;
        }
        Ok(trace)
    }

    pub fn user(&self) -> &str {
        &self.user
    }

    pub fn session(&self) -> &str {
        &self.session
    }

    pub fn events(&self) -> &[DesignEvent] {
        &self.events
    }

    pub fn nodes(&self) -> &[ConcreteNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn use_model(&self) -> &UseModel {
        &self.use_model
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Label of the selected domain, if the trace opens with one.
    pub fn domain(&self) -> Option<&str> {
        self.events
            .iter()
            .find(|e| e.process == ProcessKind::SelectDomain)
            .map(|e| e.label.as_str())
    }

    /// Checks `event` against the trace without recording it.
    pub fn check_event(&self, event: &DesignEvent) -> Result<(), TraceError> {
        if event.session != self.session {
            return Err(TraceError::SessionMismatch {
                expected: self.session.clone(),
                got: event.session.clone(),
            });
        }
        let expected = self.events.len() as u64;
        if event.seq != expected {
            return Err(TraceError::SeqGap {
                expected,
                got: event.seq,
            });
        }
        if event.process.object() != event.object {
            return Err(TraceError::IllegalPairing {
                process: event.process,
                object: event.object,
            });
        }
        if event.label.trim().is_empty() {
            return Err(TraceError::EmptyLabel(event.seq));
        }
        self.use_model
            .resolve_parent(event.seq, event.object, &event.label, event.context.as_deref())?;
        Ok(())
    }

    /// Appends the event's process and object nodes with their manipulation,
    /// temporal and contextualization edges. Nothing changes on error.
    pub fn record_event(&mut self, event: DesignEvent) -> Result<(), TraceError> {
        self.check_event(&event)?;
        let seq = event.seq;
        let process_id = NodeId((2 * seq + 1) as u32);
        let object_id = NodeId((2 * seq + 2) as u32);

        let (_, parent) = self.use_model.push(&event)?;
        self.nodes.push(ConcreteNode {
            id: process_id,
            abstract_node: AbstractNode::process(event.process),
            label: event.process.title().to_string(),
            timestamp: 2 * seq + 1,
            session: self.session.clone(),
        });
        self.nodes.push(ConcreteNode {
            id: object_id,
            abstract_node: AbstractNode::object(event.object),
            label: event.label.clone(),
            timestamp: 2 * seq + 2,
            session: self.session.clone(),
        });
        self.edges.push(Edge {
            kind: EdgeKind::Manipulation,
            from: process_id,
            to: object_id,
        });
        if seq > 0 {
            self.edges.push(Edge {
                kind: EdgeKind::TemporalNext,
                from: NodeId((2 * seq - 1) as u32),
                to: process_id,
            });
        }
        if let Some(p) = parent {
            let parent_seq = self.use_model.nodes[p].seq;
            self.edges.push(Edge {
                kind: EdgeKind::Contextualization,
                from: object_id,
                to: NodeId((2 * parent_seq + 2) as u32),
            });
        }
        self.events.push(event);
        Ok(())
    }

    /// Steps in timestamp order.
    pub fn linearize(&self) -> Vec<TraceStep> {
        self.events
            .iter()
            .map(|e| TraceStep {
                seq: e.seq,
                process: e.process,
                object: e.object,
                label: e.label.clone(),
            })
            .collect()
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn to_document(&self) -> TraceDocument {
        TraceDocument {
            events: self
                .events
                .iter()
                .map(|e| EventRecord {
                    context: e.context.clone(),
                    label: e.label.clone(),
                    object: e.object,
                    process: e.process,
                    seq: e.seq,
                })
                .collect(),
            format_version: FORMAT_VERSION,
            session: self.session.clone(),
            user: self.user.clone(),
        }
    }

    pub fn from_document(doc: TraceDocument) -> Result<Self, TraceError> {
        if doc.format_version != FORMAT_VERSION {
            return Err(TraceError::UnsupportedVersion(doc.format_version));
        }
        let session = doc.session.clone();
        GrossTrace::from_events(
            doc.user,
            doc.session,
            doc.events.into_iter().map(|r| DesignEvent {
                session: session.clone(),
                seq: r.seq,
                process: r.process,
                object: r.object,
                label: r.label,
                context: r.context,
            }),
        )
    }
}

/// Serialized form of a trace. Fields are declared in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDocument {
    pub events: Vec<EventRecord>,
    pub format_version: u32,
    pub session: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub context: Option<String>,
    pub label: String,
    pub object: ObjectKind,
    pub process: ProcessKind,
    pub seq: u64,
}

pub(crate) fn parse_error(e: serde_json::Error) -> TraceError {
    TraceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Canonical document text, newline-terminated.
pub fn serialize(trace: &GrossTrace) -> String {
    serialize_document(&trace.to_document())
}

pub fn serialize_document(doc: &TraceDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("trace document serializes");
    out.push('\n');
    out
}

pub fn deserialize(text: &str) -> Result<GrossTrace, TraceError> {
    let doc: TraceDocument = serde_json::from_str(text).map_err(parse_error)?;
    GrossTrace::from_document(doc)
}
