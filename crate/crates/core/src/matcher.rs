//! Case matching and next-step suggestion.
//!
//! Episodes are compared on their [`EpisodeLabel`] sequences; user-chosen
//! names never take part. A stored episode whose labels start with the
//! query splits into a problem part (the matched prefix) and a solution
//! part (the rest), and the solution's first item is the proposed next
//! step. Stored episodes that are only similar qualify when they pass
//! `min_similarity` and contain the query's last label before their final
//! item.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clover::{ProcessKind, TaskModel};
use crate::corpus::{CorpusId, CorpusSnapshot, IndexedEpisode};
use crate::episode::{merged_episode, Episode, EpisodeItem, EpisodeLabel, GranularityLevel, Scope};
use crate::schema::{LinkSpec, ObjectKind, SchemaDraft};
use crate::trace::{DesignAction, GrossTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("min_similarity must lie in [0, 1], got {0}")]
    Similarity(f64),
    #[error("min_nodes must be at least 1")]
    MinNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchThresholds {
    pub min_similarity: f64,
    pub min_nodes: usize,
    pub max_candidates: usize,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            min_similarity: 0.6,
            min_nodes: 3,
            max_candidates: 5,
        }
    }
}

impl MatchThresholds {
    pub fn new(min_similarity: f64, min_nodes: usize, max_candidates: usize) -> Result<Self, ThresholdError> {
        let t = MatchThresholds {
            min_similarity,
            min_nodes,
            max_candidates,
        };
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<(), ThresholdError> {
        if !(0.0..=1.0).contains(&self.min_similarity) {
            return Err(ThresholdError::Similarity(self.min_similarity));
        }
        if self.min_nodes == 0 {
            return Err(ThresholdError::MinNodes);
        }
        Ok(())
    }
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `|LCS(a, b)| / max(|a|, |b|)`; two empty sequences are identical.
pub fn similarity(a: &[EpisodeLabel], b: &[EpisodeLabel]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    lcs_len(a, b) as f64 / longest as f64
}

/// Splits `stored` at the end of `query` when `query` is a strict prefix of its labels.
pub fn split_problem_solution(stored: &Episode, query: &[EpisodeLabel]) -> Option<(usize, Vec<EpisodeItem>)> {
    if query.len() >= stored.len() {
        return None;
    }
    let prefix_matches = stored
        .items
        .iter()
        .zip(query)
        .all(|(item, q)| item.episode_label() == *q);
    prefix_matches.then(|| (query.len(), stored.items[query.len()..].to_vec()))
}

/// Problem length for a non-prefix candidate.
///
/// The query's last label must occur in `stored` before its final item. If
/// the query holds that label `k` times, the split follows the `k`-th such
/// occurrence (or the last one when there are fewer).
pub fn anchor_position(stored: &[EpisodeLabel], query: &[EpisodeLabel]) -> Option<usize> {
    let last = *query.last()?;
    let positions: Vec<usize> = stored[..stored.len().saturating_sub(1)]
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == last)
        .map(|(i, _)| i)
        .collect();
    if positions.is_empty() {
        return None;
    }
    let k = query.iter().filter(|l| **l == last).count();
    Some(positions[k.min(positions.len()) - 1] + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub episode_ref: CorpusId,
    pub scope: Scope,
    pub score: f64,
    /// The query is a prefix of the stored episode.
    pub exact: bool,
    pub problem_len: usize,
    pub solution_items: Vec<EpisodeItem>,
}

impl Match {
    pub fn next_item(&self) -> &EpisodeItem {
        &self.solution_items[0]
    }
}

/// Exact prefix matches first, then by score, next object kind and corpus id.
pub fn match_order(a: &Match, b: &Match) -> Ordering {
    b.exact
        .cmp(&a.exact)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| a.next_item().object.cmp(&b.next_item().object))
        .then_with(|| a.episode_ref.cmp(&b.episode_ref))
}

fn candidate_match(query: &Episode, labels: &[EpisodeLabel], c: &IndexedEpisode, t: &MatchThresholds) -> Option<Match> {
    if c.episode.scope != query.scope || c.episode.len() < t.min_nodes {
        return None;
    }
    if let Some((problem_len, solution_items)) = split_problem_solution(&c.episode, labels) {
        return Some(Match {
            episode_ref: c.corpus_id.clone(),
            scope: query.scope,
            score: 1.0,
            exact: true,
            problem_len,
            solution_items,
        });
    }
    let stored = c.episode.labels();
    let problem_len = anchor_position(&stored, labels)?;
    let score = similarity(labels, &stored[..problem_len]);
    (score >= t.min_similarity).then(|| Match {
        episode_ref: c.corpus_id.clone(),
        scope: query.scope,
        score,
        exact: false,
        problem_len,
        solution_items: c.episode.items[problem_len..].to_vec(),
    })
}

/// All stored episodes matching `query`, in [`match_order`].
pub fn find_matches<'a>(
    query: &Episode,
    candidates: impl IntoIterator<Item = &'a IndexedEpisode>,
    thresholds: &MatchThresholds,
) -> Vec<Match> {
    let labels = query.labels();
    if labels.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<Match> = candidates
        .into_iter()
        .filter_map(|c| candidate_match(query, &labels, c, thresholds))
        .collect();
    out.sort_by(match_order);
    out
}

/// True when some candidate qualifies structurally (size, and prefix or
/// anchor), whatever its similarity. Decides which scope answers.
fn scope_has_candidates<'a>(
    query: &Episode,
    candidates: impl IntoIterator<Item = &'a IndexedEpisode>,
    thresholds: &MatchThresholds,
) -> bool {
    let labels = query.labels();
    candidates.into_iter().any(|c| {
        c.episode.scope == query.scope
            && c.episode.len() >= thresholds.min_nodes
            && (split_problem_solution(&c.episode, &labels).is_some()
                || anchor_position(&c.episode.labels(), &labels).is_some())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    ExactContinuation,
    Candidates,
    NoAdvice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub next: EpisodeLabel,
    /// Placeholder name derived from the source; the designer supplies the real one.
    pub suggested_label: String,
    pub source: CorpusId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guidance {
    pub object: ObjectKind,
    pub process: ProcessKind,
    pub required_context: Option<ProcessKind>,
    pub prior_steps: Vec<ProcessKind>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub kind: SuggestionKind,
    /// Scope whose episodes produced the proposals.
    pub scope: Option<Scope>,
    pub proposals: Vec<Proposal>,
    pub guidance: Option<Guidance>,
}

impl Suggestion {
    pub fn no_advice() -> Self {
        Suggestion {
            kind: SuggestionKind::NoAdvice,
            scope: None,
            proposals: Vec::new(),
            guidance: None,
        }
    }

    pub fn top(&self) -> Option<&Proposal> {
        self.proposals.first()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("suggestion serializes")
    }
}

/// Scopes tried by [`suggest_next`], finest first.
pub const FALLBACK_SCOPES: [Scope; 4] = [
    Scope::STRUCTURE_DETAIL,
    Scope::single(GranularityLevel::Structure),
    Scope::single(GranularityLevel::Model),
    Scope::single(GranularityLevel::Domain),
];

pub fn placeholder_label(item: &EpisodeItem) -> String {
    match item.object {
        ObjectKind::Link => match item.label.parse::<LinkSpec>() {
            Ok(spec) => format!("Link: {}–{}", spec.source, spec.target),
            Err(_) => format!("Link: {}", item.label),
        },
        other => format!("{}: {}", other.title(), item.label),
    }
}

fn proposal(m: &Match) -> Proposal {
    let next = m.next_item();
    Proposal {
        next: next.episode_label(),
        suggested_label: placeholder_label(next),
        source: m.episode_ref.clone(),
        score: m.score,
    }
}

/// Recommends the step after the last event of `trace`.
///
/// Scopes are tried finest first. The first scope with structurally eligible
/// candidates answers: when every exact-prefix match agrees on the next
/// step that step is the exact continuation, otherwise up to
/// `max_candidates` matches are listed. Stored episodes from other domains
/// are never considered.
pub fn suggest_next(
    trace: &GrossTrace,
    corpus: &CorpusSnapshot,
    task_model: &TaskModel,
    thresholds: &MatchThresholds,
) -> Suggestion {
    let Some(domain) = trace.domain() else {
        return Suggestion::no_advice();
    };
    for scope in FALLBACK_SCOPES {
        let Some(query) = merged_episode(trace, scope) else {
            continue;
        };
        let candidates = corpus.episodes(domain, scope);
        if !scope_has_candidates(&query, candidates, thresholds) {
            continue;
        }
        let matches = find_matches(&query, candidates, thresholds);
        let Some(first) = matches.first() else {
            return Suggestion::no_advice();
        };
        let exact: Vec<&Match> = matches.iter().filter(|m| m.exact).collect();
        let unanimous = !exact.is_empty()
            && exact
                .iter()
                .all(|m| m.next_item().episode_label() == exact[0].next_item().episode_label());
        let (kind, proposals) = if unanimous {
            (SuggestionKind::ExactContinuation, vec![proposal(exact[0])])
        } else {
            let take = thresholds.max_candidates.max(1);
            (SuggestionKind::Candidates, matches.iter().take(take).map(proposal).collect())
        };
        let guidance = Some(guidance_for(first.next_item().object, task_model));
        return Suggestion {
            kind,
            scope: Some(scope),
            proposals,
            guidance,
        };
    }
    Suggestion::no_advice()
}

pub fn guidance_for(object: ObjectKind, task_model: &TaskModel) -> Guidance {
    let process = object.process();
    let entry = task_model.entry(process);
    Guidance {
        object,
        process,
        required_context: entry.context,
        prior_steps: task_model.prior_steps(process),
        note: entry.note.clone(),
    }
}

fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !taken(n))
        .expect("unbounded name space")
}

/// A concrete action of kind `next` that `draft` would accept, with a fresh
/// name and the most recent fitting context. `None` when the draft has no
/// context for that kind of step.
pub fn draft_action(next: EpisodeLabel, draft: &SchemaDraft) -> Option<DesignAction> {
    let model = draft.model.map(|m| m.token().to_string());
    let action = |label: String, context: Option<String>| Some(DesignAction::new(next.process, label, context.as_deref()));
    match next.process {
        ProcessKind::SelectDomain => draft.domain.is_none().then(|| DesignAction::new(next.process, "Domain", None)),
        ProcessKind::SelectModel => {
            let domain = draft.domain.clone()?;
            draft
                .model
                .is_none()
                .then(|| DesignAction::new(next.process, "star", Some(&domain)))
        }
        ProcessKind::CreateFactTable | ProcessKind::CreateDimensionTable => {
            let base = if next.process == ProcessKind::CreateFactTable { "Fact" } else { "Dimension" };
            action(fresh_name(base, |n| draft.has_table(n)), Some(model?))
        }
        ProcessKind::AddFactKey | ProcessKind::AddFactAttribute => {
            let table = draft.fact_tables.last()?;
            let base = if next.process == ProcessKind::AddFactKey { "Key" } else { "Measure" };
            action(fresh_name(base, |n| table.has_field(n)), Some(table.name.clone()))
        }
        ProcessKind::AddDimensionKey | ProcessKind::AddDimensionAttribute => {
            let table = draft.dimension_tables.last()?;
            let base = if next.process == ProcessKind::AddDimensionKey { "Key" } else { "Attribute" };
            action(fresh_name(base, |n| table.has_field(n)), Some(table.name.clone()))
        }
        ProcessKind::AddLink => {
            let model = model?;
            let fact = draft.fact_tables.last()?;
            let linked = |dim: &str, key: &str| {
                draft
                    .links
                    .iter()
                    .any(|l| l.fact_table == fact.name && l.fact_key == key && l.dimension_table == dim)
            };
            // Prefer a key both ends declare and that is not linked yet.
            for dim in &draft.dimension_tables {
                if let Some(key) = fact.keys.iter().find(|k| dim.has_key(k) && !linked(&dim.name, k)) {
                    return action(LinkSpec::new(&fact.name, key, &dim.name).to_string(), Some(model));
                }
            }
            let dim = draft.dimension_tables.last()?;
            let key = fresh_name("Key", |k| linked(&dim.name, k));
            action(LinkSpec::new(&fact.name, key, &dim.name).to_string(), Some(model))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clover::ProcessKind::*;
    use crate::episode::TraceRef;

    fn l(p: ProcessKind) -> EpisodeLabel {
        EpisodeLabel::of(p)
    }

    fn episode(labels: &[ProcessKind]) -> Episode {
        let items: Vec<EpisodeItem> = labels
            .iter()
            .enumerate()
            .map(|(i, p)| EpisodeItem {
                seq: i as u64,
                process: *p,
                object: p.object(),
                label: format!("n{i}"),
                context: None,
            })
            .collect();
        Episode {
            trace_ref: TraceRef {
                user: "u".into(),
                session: "s".into(),
            },
            scope: Scope::STRUCTURE_DETAIL,
            span: (0, items.len().saturating_sub(1) as u64),
            items,
        }
    }

    fn indexed(id: &str, labels: &[ProcessKind]) -> IndexedEpisode {
        IndexedEpisode {
            corpus_id: CorpusId::from_raw(id),
            episode: episode(labels),
        }
    }

    #[test]
    fn similarity_examples() {
        let a = [l(CreateFactTable), l(AddFactKey), l(AddFactAttribute)];
        assert_eq!(similarity(&a, &a), 1.0);
        assert_eq!(similarity(&[l(CreateFactTable)], &[l(CreateDimensionTable)]), 0.0);
        let b = [l(CreateFactTable), l(AddFactKey), l(AddFactKey), l(AddFactAttribute)];
        assert_eq!(similarity(&a, &b), 0.75);
        assert_eq!(similarity(&b, &a), 0.75);
        assert_eq!(similarity(&[], &a), 0.0);
    }

    #[test]
    fn split_examples() {
        let stored = episode(&[CreateFactTable, AddFactKey, AddFactAttribute, CreateDimensionTable, AddLink]);
        let (p, sol) = split_problem_solution(&stored, &[l(CreateFactTable), l(AddFactKey)]).unwrap();
        assert_eq!(p, 2);
        assert_eq!(
            sol.iter().map(|i| i.process).collect::<Vec<_>>(),
            vec![AddFactAttribute, CreateDimensionTable, AddLink]
        );
        let short = episode(&[CreateFactTable, AddFactKey]);
        assert!(split_problem_solution(&short, &[l(CreateFactTable), l(AddFactKey)]).is_none());
        assert!(split_problem_solution(&stored, &[l(AddFactKey)]).is_none());
    }

    #[test]
    fn anchor_follows_occurrence_count() {
        let stored = [l(CreateFactTable), l(AddFactKey), l(AddFactKey), l(AddFactKey), l(AddFactAttribute)];
        assert_eq!(anchor_position(&stored, &[l(CreateDimensionTable), l(AddFactKey)]), Some(2));
        assert_eq!(
            anchor_position(&stored, &[l(AddFactKey), l(AddDimensionKey), l(AddFactKey)]),
            Some(3)
        );
        // The only occurrence is the final item.
        assert_eq!(anchor_position(&stored, &[l(AddFactAttribute)]), None);
        assert_eq!(anchor_position(&stored, &[l(AddLink)]), None);
    }

    #[test]
    fn empty_corpus_no_matches() {
        let q = episode(&[CreateFactTable]);
        assert!(find_matches(&q, &[], &MatchThresholds::default()).is_empty());
    }

    #[test]
    fn ordering_and_filters() {
        let q = episode(&[CreateFactTable, AddFactKey]);
        let corpus = vec![
            indexed("b", &[CreateFactTable, AddFactKey, AddFactAttribute]),
            indexed("a", &[CreateFactTable, AddFactKey, AddFactKey]),
            indexed("c", &[CreateFactTable, AddFactKey]),
            indexed("d", &[CreateDimensionTable, AddFactKey, AddLink]),
            indexed("e", &[CreateFactTable, AddFactKey, CreateDimensionTable]),
        ];
        let t = MatchThresholds::default();
        let m = find_matches(&q, &corpus, &t);
        let ids: Vec<_> = m.iter().map(|m| m.episode_ref.as_str()).collect();
        // "c" has nothing left; "d" scores 0.5.
        assert_eq!(ids, vec!["e", "a", "b"]);
        assert!(m.iter().all(|m| m.exact && m.score == 1.0));

        let loose = MatchThresholds::new(0.5, 3, 5).unwrap();
        let m = find_matches(&q, &corpus, &loose);
        assert_eq!(m.last().unwrap().episode_ref.as_str(), "d");
        assert!(!m.last().unwrap().exact);
    }

    #[test]
    fn thresholds_validated() {
        assert!(MatchThresholds::new(1.2, 3, 5).is_err());
        assert!(MatchThresholds::new(0.5, 0, 5).is_err());
        assert!(MatchThresholds::new(1.0, 1, 0).is_ok());
    }

    #[test]
    fn guidance_examples() {
        let tm = TaskModel::canonical();
        assert_eq!(guidance_for(ObjectKind::FactKey, &tm).required_context, Some(CreateFactTable));
        let root = guidance_for(ObjectKind::Domain, &tm);
        assert!(root.required_context.is_none() && root.prior_steps.is_empty());
        let link = guidance_for(ObjectKind::Link, &tm);
        assert!(link.prior_steps.contains(&CreateFactTable));
        assert!(link.prior_steps.contains(&CreateDimensionTable));
    }

    #[test]
    fn placeholders() {
        let item = EpisodeItem {
            seq: 13,
            process: AddLink,
            object: ObjectKind::Link,
            label: "Sale[ID-Seller]->Seller".into(),
            context: None,
        };
        assert_eq!(placeholder_label(&item), "Link: Sale–Seller");
    }
}
