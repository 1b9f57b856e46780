//! Leave-one-out evaluation of next-step suggestions.
//!
//! Every record is removed in turn and replayed event by event against the
//! rest of the corpus. After each prefix that still has a next event, the
//! top proposal is compared with that event's `(process, object)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clover::TaskModel;
use crate::corpus::{CorpusId, CorpusSnapshot};
use crate::episode::EpisodeLabel;
use crate::matcher::{suggest_next, MatchThresholds, SuggestionKind};
use crate::trace::GrossTrace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("leave-one-out needs at least 2 records, corpus has {0}")]
    CorpusTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Hit,
    Miss,
    NoAdvice,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionStats {
    pub points: usize,
    pub hits: usize,
    pub misses: usize,
    pub no_advice: usize,
}

impl PositionStats {
    fn add(&mut self, o: Outcome) {
        self.points += 1;
        match o {
            Outcome::Hit => self.hits += 1,
            Outcome::Miss => self.misses += 1,
            Outcome::NoAdvice => self.no_advice += 1,
        }
    }

    /// `hits / (hits + misses)`; `None` when no suggestion fired.
    pub fn accuracy(&self) -> Option<f64> {
        let fired = self.hits + self.misses;
        (fired > 0).then(|| self.hits as f64 / fired as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub corpus_id: CorpusId,
    pub user: String,
    pub session: String,
    /// Entry `i` predicts event `i + 1` from the first `i + 1` events.
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sessions: usize,
    pub points: usize,
    pub hits: usize,
    pub misses: usize,
    pub no_advice: usize,
    pub accuracy: Option<f64>,
    /// Keyed by prefix length.
    pub per_position: BTreeMap<usize, PositionStats>,
    pub per_session: Vec<SessionOutcome>,
}

pub fn eval_session(
    held_out: &GrossTrace,
    rest: &CorpusSnapshot,
    thresholds: &MatchThresholds,
    task_model: &TaskModel,
) -> Vec<Outcome> {
    let events = held_out.events();
    let mut prefix = GrossTrace::new(held_out.user(), held_out.session());
    let mut out = Vec::with_capacity(events.len().saturating_sub(1));
    for (i, event) in events.iter().enumerate() {
        prefix
            .record_event(event.clone())
            .expect("stored traces replay cleanly");
        let Some(actual) = events.get(i + 1) else {
            break;
        };
        let s = suggest_next(&prefix, rest, task_model, thresholds);
        let outcome = match (s.kind, s.top()) {
            (SuggestionKind::NoAdvice, _) | (_, None) => Outcome::NoAdvice,
            (_, Some(p)) if p.next == EpisodeLabel::of(actual.process) => Outcome::Hit,
            _ => Outcome::Miss,
        };
        out.push(outcome);
    }
    out
}

/// Records are visited in id order, so the report does not depend on load order.
pub fn eval_leave_one_out(
    corpus: &CorpusSnapshot,
    thresholds: &MatchThresholds,
    task_model: &TaskModel,
) -> Result<EvalReport, EvalError> {
    if corpus.len() < 2 {
        return Err(EvalError::CorpusTooSmall(corpus.len()));
    }
    let mut per_position: BTreeMap<usize, PositionStats> = BTreeMap::new();
    let mut per_session = Vec::with_capacity(corpus.len());
    for record in corpus.records() {
        let rest = corpus.without(&record.corpus_id);
        let outcomes = eval_session(&record.trace, &rest, thresholds, task_model);
        for (i, o) in outcomes.iter().enumerate() {
            per_position.entry(i + 1).or_default().add(*o);
        }
        per_session.push(SessionOutcome {
            corpus_id: record.corpus_id.clone(),
            user: record.trace.user().to_string(),
            session: record.trace.session().to_string(),
            outcomes,
        });
    }
    let total = per_position.values().fold(PositionStats::default(), |mut acc, p| {
        acc.points += p.points;
        acc.hits += p.hits;
        acc.misses += p.misses;
        acc.no_advice += p.no_advice;
        acc
    });
    Ok(EvalReport {
        sessions: per_session.len(),
        points: total.points,
        hits: total.hits,
        misses: total.misses,
        no_advice: total.no_advice,
        accuracy: total.accuracy(),
        per_position,
        per_session,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusStore;
    use crate::samples::{self, Template};

    fn store_template(store: &mut CorpusStore, t: Template, domain: &str, n: usize) {
        for i in 0..n {
            let actions = t.actions(domain, &format!("v{i}"));
            let events = samples::to_events(&actions, &format!("{}-{i}", t.name()));
            let trace = GrossTrace::from_events("U", format!("{}-{i}", t.name()), events).unwrap();
            store.store_trace(&trace).unwrap();
        }
    }

    #[test]
    fn too_small() {
        let mut store = CorpusStore::in_memory(3);
        store.store_trace(&samples::sale_trace("X", "s")).unwrap();
        let r = eval_leave_one_out(&store.snapshot(), &MatchThresholds::default(), &TaskModel::canonical());
        assert_eq!(r.unwrap_err(), EvalError::CorpusTooSmall(1));
    }

    #[test]
    fn identical_structures_always_hit() {
        let mut store = CorpusStore::in_memory(3);
        store_template(&mut store, Template::StarTwoDimensions, "Commerce", 2);
        let r = eval_leave_one_out(&store.snapshot(), &MatchThresholds::default(), &TaskModel::canonical()).unwrap();
        assert_eq!(r.misses, 0);
        assert!(r.hits > 0);
        assert_eq!(r.hits + r.misses + r.no_advice, r.points);
        assert_eq!(r.accuracy, Some(1.0));
    }

    #[test]
    fn disjoint_domains_never_advise() {
        let mut store = CorpusStore::in_memory(3);
        store_template(&mut store, Template::StarTwoDimensions, "Commerce", 1);
        store_template(&mut store, Template::ConstellationTwoFacts, "Health", 1);
        let t = MatchThresholds::new(1.0, 3, 5).unwrap();
        let r = eval_leave_one_out(&store.snapshot(), &t, &TaskModel::canonical()).unwrap();
        assert_eq!(r.hits, 0);
        assert_eq!(r.no_advice, r.points);
    }
}
