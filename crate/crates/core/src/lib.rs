//! Trace-based assistant for data-warehouse schema design.
//!
//! Design actions are recorded as a gross trace of user, process and object
//! nodes ([`trace`], [`clover`]). Completed traces are cut into
//! granularity-level episodes ([`episode`]) and kept in a content-addressed
//! corpus ([`corpus`]). While a session is live, its episodes are matched
//! against the corpus to propose the next step ([`matcher`]).

pub mod clover;
pub mod corpus;
pub mod dot;
pub mod episode;
pub mod eval;
pub mod matcher;
pub mod samples;
pub mod schema;
pub mod script;
pub mod service;
pub mod trace;

pub use clover::{EdgeKind, NodeKind, ProcessKind, TaskModel};
pub use corpus::{
    export_corpus, load_corpus, CorpusError, CorpusId, CorpusRecord, CorpusSnapshot, CorpusStats, CorpusStore,
    IndexedEpisode,
};
pub use episode::{extract_all, extract_episode, merged_episode, Episode, EpisodeLabel, GranularityLevel, Scope};
pub use eval::{eval_leave_one_out, EvalError, EvalReport, Outcome};
pub use matcher::{find_matches, similarity, suggest_next, Match, MatchThresholds, Suggestion, SuggestionKind};
pub use schema::{apply_action, validate, ModelKind, ObjectKind, SchemaDraft, SchemaError, ValidationReport};
pub use script::{replay_script, SessionScript, Transcript};
pub use service::{AssistantService, EventResponse, ServiceError, SessionState, SessionStatus};
pub use trace::{DesignAction, DesignEvent, GrossTrace, TraceDocument, TraceError};
