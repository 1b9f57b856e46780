//! Content-addressed corpus of completed traces.
//!
//! Each record is one canonical trace document named by the SHA-256 of its
//! bytes. The store is append-only and hands out immutable
//! [`CorpusSnapshot`]s; a store after a snapshot was taken copies on write,
//! so readers never observe partial updates.
//!
//! On disk a corpus is a directory of `<id>.trace` files plus an `index`
//! listing that is rewritten on every store and never read back.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clover::ProcessKind;
use crate::episode::{extract_all, merged_episode, Episode, GranularityLevel, Scope};
use crate::schema::ModelKind;
use crate::trace::{self, GrossTrace, TraceError};

pub const TRACE_EXTENSION: &str = "trace";
pub const INDEX_FILE: &str = "index";

/// Hex SHA-256 of a canonical trace document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorpusId(String);

impl CorpusId {
    pub fn of_document(document: &str) -> Self {
        CorpusId(hex::encode(Sha256::digest(document.as_bytes())))
    }

    /// Wraps an id without checking it.
    pub fn from_raw(id: impl Into<String>) -> Self {
        CorpusId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CorpusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("trace has {events} events, at least {min} required")]
    TooShort { events: usize, min: usize },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {error}", path.display())]
    Parse { path: PathBuf, error: TraceError },
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub corpus_id: CorpusId,
    pub trace: GrossTrace,
    /// Canonical document; its hash is `corpus_id`.
    pub document: String,
    pub domain: String,
    pub model: ModelKind,
    pub episodes: BTreeMap<GranularityLevel, Episode>,
    /// Metadata only; ignored by equality.
    pub stored_at: DateTime<Utc>,
}

impl PartialEq for CorpusRecord {
    fn eq(&self, other: &Self) -> bool {
        self.corpus_id == other.corpus_id
            && self.document == other.document
            && self.trace == other.trace
            && self.domain == other.domain
            && self.model == other.model
            && self.episodes == other.episodes
    }
}

impl CorpusRecord {
    /// Builds a record, checking that the trace opens with a domain and a
    /// parseable model selection.
    pub fn from_trace(trace: GrossTrace, min_nodes: usize) -> Result<Self, CorpusError> {
        let events = trace.events();
        if events.len() < min_nodes {
            return Err(CorpusError::TooShort {
                events: events.len(),
                min: min_nodes,
            });
        }
        let (domain, model) = match events {
            [d, m, ..] if d.process == ProcessKind::SelectDomain && m.process == ProcessKind::SelectModel => {
                let model = m
                    .label
                    .parse::<ModelKind>()
                    .map_err(|e| CorpusError::MalformedTrace(e.to_string()))?;
                (d.label.clone(), model)
            }
            _ => {
                return Err(CorpusError::MalformedTrace(
                    "trace must begin with selectdomain then selectmodel".into(),
                ))
            }
        };
        let document = trace::serialize(&trace);
        Ok(CorpusRecord {
            corpus_id: CorpusId::of_document(&document),
            episodes: extract_all(&trace),
            trace,
            document,
            domain,
            model,
            stored_at: Utc::now(),
        })
    }

    /// Episode for an indexed scope.
    pub fn episode(&self, scope: Scope) -> Option<Episode> {
        match scope.as_level() {
            Some(level) => self.episodes.get(&level).cloned(),
            None => merged_episode(&self.trace, scope),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedEpisode {
    pub corpus_id: CorpusId,
    pub episode: Episode,
}

/// Scopes the index covers: every single level plus structure+detail.
pub const INDEXED_SCOPES: [Scope; 5] = [
    Scope::single(GranularityLevel::Domain),
    Scope::single(GranularityLevel::Model),
    Scope::single(GranularityLevel::Structure),
    Scope::single(GranularityLevel::Detail),
    Scope::STRUCTURE_DETAIL,
];

/// Point-in-time view of the corpus. Index entries are sorted by corpus id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSnapshot {
    records: BTreeMap<CorpusId, Arc<CorpusRecord>>,
    index: BTreeMap<(String, Scope), Vec<IndexedEpisode>>,
}

impl CorpusSnapshot {
    pub fn from_records(records: impl IntoIterator<Item = CorpusRecord>) -> Self {
        let mut snap = CorpusSnapshot::default();
        for r in records {
            snap.insert(Arc::new(r));
        }
        snap
    }

    fn insert(&mut self, record: Arc<CorpusRecord>) {
        for scope in INDEXED_SCOPES {
            let Some(episode) = record.episode(scope) else {
                continue;
            };
            let slot = self.index.entry((record.domain.clone(), scope)).or_default();
            let at = slot.partition_point(|e| e.corpus_id < record.corpus_id);
            slot.insert(
                at,
                IndexedEpisode {
                    corpus_id: record.corpus_id.clone(),
                    episode,
                },
            );
        }
        self.records.insert(record.corpus_id.clone(), record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, id: &CorpusId) -> Option<&CorpusRecord> {
        self.records.get(id).map(Arc::as_ref)
    }

    pub fn contains(&self, id: &CorpusId) -> bool {
        self.records.contains_key(id)
    }

    /// Records in id order.
    pub fn records(&self) -> impl Iterator<Item = &CorpusRecord> {
        self.records.values().map(Arc::as_ref)
    }

    pub fn ids(&self) -> impl Iterator<Item = &CorpusId> {
        self.records.keys()
    }

    /// Indexed episodes of `domain` at `scope`; empty for scopes outside [`INDEXED_SCOPES`].
    pub fn episodes(&self, domain: &str, scope: Scope) -> &[IndexedEpisode] {
        self.index
            .get(&(domain.to_string(), scope))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Number of single-level episodes held across all records.
    pub fn level_episode_count(&self) -> usize {
        self.records.values().map(|r| r.episodes.len()).sum()
    }

    /// The snapshot minus one record, with the index rebuilt.
    pub fn without(&self, id: &CorpusId) -> CorpusSnapshot {
        let mut snap = CorpusSnapshot::default();
        for (rid, r) in &self.records {
            if rid != id {
                snap.insert(Arc::clone(r));
            }
        }
        snap
    }

    /// Full scan: every index entry resolves to a record holding that
    /// episode, and every record episode is indexed exactly once.
    pub fn index_is_consistent(&self) -> bool {
        let mut seen = 0usize;
        for ((domain, scope), entries) in &self.index {
            if entries.windows(2).any(|w| w[0].corpus_id >= w[1].corpus_id) {
                return false;
            }
            for e in entries {
                let Some(r) = self.records.get(&e.corpus_id) else {
                    return false;
                };
                if &r.domain != domain || r.episode(*scope).as_ref() != Some(&e.episode) {
                    return false;
                }
                seen += 1;
            }
        }
        let expected: usize = self
            .records
            .values()
            .map(|r| INDEXED_SCOPES.iter().filter(|s| r.episode(**s).is_some()).count())
            .sum();
        seen == expected
    }

    pub fn stats(&self) -> CorpusStats {
        let mut stats = CorpusStats::zeroed();
        for r in self.records.values() {
            stats.records += 1;
            *stats.domains.entry(r.domain.clone()).or_default() += 1;
            *stats.models.entry(r.model.token().to_string()).or_default() += 1;
            for level in r.episodes.keys() {
                *stats.levels.entry(level.token().to_string()).or_default() += 1;
            }
        }
        stats
    }
}

/// Counts per domain, model and level. Model and level keys are always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records: usize,
    pub domains: BTreeMap<String, usize>,
    pub models: BTreeMap<String, usize>,
    pub levels: BTreeMap<String, usize>,
}

impl CorpusStats {
    fn zeroed() -> Self {
        CorpusStats {
            records: 0,
            domains: BTreeMap::new(),
            models: ModelKind::ALL.iter().map(|m| (m.token().to_string(), 0)).collect(),
            levels: GranularityLevel::ALL
                .iter()
                .map(|l| (l.token().to_string(), 0))
                .collect(),
        }
    }
}

/// Per-file failure reported by [`load_corpus`].
#[derive(Debug)]
pub struct LoadReport {
    pub loaded: usize,
    pub errors: Vec<CorpusError>,
}

/// Single-writer store. With a directory, every new record is written
/// before it becomes visible in snapshots.
#[derive(Debug)]
pub struct CorpusStore {
    dir: Option<PathBuf>,
    min_nodes: usize,
    current: Arc<CorpusSnapshot>,
}

impl CorpusStore {
    pub fn in_memory(min_nodes: usize) -> Self {
        CorpusStore {
            dir: None,
            min_nodes,
            current: Arc::new(CorpusSnapshot::default()),
        }
    }

    /// Opens (creating if needed) a corpus directory and loads it. Bad
    /// files are skipped and returned in the report.
    pub fn open(dir: impl AsRef<Path>, min_nodes: usize) -> Result<(Self, LoadReport), CorpusError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        let (records, report) = read_records(dir, min_nodes)?;
        let store = CorpusStore {
            dir: Some(dir.to_path_buf()),
            min_nodes,
            current: Arc::new(CorpusSnapshot::from_records(records)),
        };
        Ok((store, report))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn min_nodes(&self) -> usize {
        self.min_nodes
    }

    pub fn snapshot(&self) -> Arc<CorpusSnapshot> {
        Arc::clone(&self.current)
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    /// Stores a completed trace and returns its id. A trace already present
    /// returns the existing id and changes nothing.
    pub fn store_trace(&mut self, trace: &GrossTrace) -> Result<CorpusId, CorpusError> {
        let record = CorpusRecord::from_trace(trace.clone(), self.min_nodes)?;
        let id = record.corpus_id.clone();
        if self.current.contains(&id) {
            log::debug!("trace {id} already stored");
            return Ok(id);
        }
        if let Some(dir) = &self.dir {
            write_atomic(&dir.join(format!("{id}.{TRACE_EXTENSION}")), &record.document)?;
        }
        Arc::make_mut(&mut self.current).insert(Arc::new(record));
        if let Some(dir) = &self.dir {
            write_index(dir, &self.current)?;
        }
        log::info!("stored trace {id}");
        Ok(id)
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CorpusError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}

fn write_index(dir: &Path, snap: &CorpusSnapshot) -> Result<(), CorpusError> {
    let mut out = String::new();
    for r in snap.records() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.corpus_id,
            r.domain,
            r.model,
            r.trace.events().len()
        ));
    }
    write_atomic(&dir.join(INDEX_FILE), &out)
}

fn read_records(dir: &Path, min_nodes: usize) -> Result<(Vec<CorpusRecord>, LoadReport), CorpusError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CorpusError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == TRACE_EXTENSION))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for path in paths {
        match read_record(&path, min_nodes) {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("skipping corpus file: {e}");
                errors.push(e);
            }
        }
    }
    let report = LoadReport {
        loaded: records.len(),
        errors,
    };
    Ok((records, report))
}

fn read_record(path: &Path, min_nodes: usize) -> Result<CorpusRecord, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let trace = trace::deserialize(&text).map_err(|error| CorpusError::Parse {
        path: path.to_path_buf(),
        error,
    })?;
    CorpusRecord::from_trace(trace, min_nodes)
}

/// Loads every `*.trace` file of `dir` into a fresh snapshot.
pub fn load_corpus(dir: impl AsRef<Path>, min_nodes: usize) -> Result<(CorpusSnapshot, LoadReport), CorpusError> {
    let (records, report) = read_records(dir.as_ref(), min_nodes)?;
    Ok((CorpusSnapshot::from_records(records), report))
}

/// Writes one canonical document per record plus the index listing.
pub fn export_corpus(snapshot: &CorpusSnapshot, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    for r in snapshot.records() {
        write_atomic(&dir.join(format!("{}.{TRACE_EXTENSION}", r.corpus_id)), &r.document)?;
    }
    write_index(dir, snapshot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    #[test]
    fn sale_trace_indexed_per_level() {
        let mut store = CorpusStore::in_memory(3);
        let id = store.store_trace(&samples::sale_trace("X", "s1")).unwrap();
        assert_eq!(id.as_str().len(), 64);
        let snap = store.snapshot();
        assert_eq!(snap.level_episode_count(), 4);
        assert_eq!(snap.episodes("Commerce", GranularityLevel::Detail.into()).len(), 1);
        assert_eq!(snap.episodes("Commerce", Scope::STRUCTURE_DETAIL)[0].episode.len(), 13);
        assert!(snap.episodes("Retail", GranularityLevel::Detail.into()).is_empty());
        assert!(snap.index_is_consistent());
    }

    #[test]
    fn idempotent_store() {
        let mut store = CorpusStore::in_memory(3);
        let t = samples::sale_trace("X", "s1");
        let a = store.store_trace(&t).unwrap();
        let b = store.store_trace(&t).unwrap();
        assert_eq!(a, b);
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn rejects_short_and_malformed() {
        let mut store = CorpusStore::in_memory(3);
        let events = samples::sale_events("X", "s");
        let one = GrossTrace::from_events("X", "s", events[..1].to_vec()).unwrap();
        assert!(matches!(store.store_trace(&one), Err(CorpusError::TooShort { events: 1, min: 3 })));
        let mut loose = CorpusStore::in_memory(1);
        assert!(matches!(loose.store_trace(&one), Err(CorpusError::MalformedTrace(_))));
        assert!(store.is_empty());
    }

    #[test]
    fn snapshots_are_isolated() {
        let mut store = CorpusStore::in_memory(3);
        for i in 0..3 {
            store.store_trace(&samples::sale_trace("X", &format!("s{i}"))).unwrap();
        }
        let before = store.snapshot();
        store.store_trace(&samples::sale_trace("X", "s3")).unwrap();
        assert_eq!(before.len(), 3);
        assert_eq!(store.snapshot().len(), 4);
    }

    #[test]
    fn stats_zero_filled() {
        let empty = CorpusSnapshot::default().stats();
        assert_eq!(empty.records, 0);
        assert!(empty.models.values().chain(empty.levels.values()).all(|n| *n == 0));
        assert_eq!(empty.models.len(), 3);
        assert_eq!(empty.levels.len(), 4);

        let mut store = CorpusStore::in_memory(3);
        store.store_trace(&samples::sale_trace("X", "s1")).unwrap();
        let s = store.snapshot().stats();
        assert_eq!(s.domains["Commerce"], 1);
        assert_eq!(s.models["star"], 1);
        assert_eq!(s.levels["detail"], 1);
    }

    #[test]
    fn without_rebuilds_index() {
        let mut store = CorpusStore::in_memory(3);
        let a = store.store_trace(&samples::sale_trace("X", "a")).unwrap();
        store.store_trace(&samples::sale_trace("X", "b")).unwrap();
        let snap = store.snapshot().without(&a);
        assert_eq!(snap.len(), 1);
        assert!(!snap.contains(&a));
        assert_eq!(snap.episodes("Commerce", Scope::STRUCTURE_DETAIL).len(), 1);
        assert!(snap.index_is_consistent());
    }
}
