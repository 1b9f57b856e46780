//! Potential graphs and episode extraction.
//!
//! Each granularity level admits a fixed set of object kinds; the four sets
//! partition [`ObjectKind`]. An episode is the order-preserving subsequence
//! of a trace whose objects a level (or a union of levels, a [`Scope`])
//! admits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clover::ProcessKind;
use crate::schema::ObjectKind;
use crate::trace::{GrossTrace, FORMAT_VERSION};

/// Granularity levels, coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GranularityLevel {
    Domain,
    Model,
    Structure,
    Detail,
}

impl GranularityLevel {
    pub const ALL: [GranularityLevel; 4] = [
        GranularityLevel::Domain,
        GranularityLevel::Model,
        GranularityLevel::Structure,
        GranularityLevel::Detail,
    ];

    pub fn admitted(self) -> &'static [ObjectKind] {
        match self {
            GranularityLevel::Domain => &[ObjectKind::Domain],
            GranularityLevel::Model => &[ObjectKind::Model],
            GranularityLevel::Structure => &[ObjectKind::FactTable, ObjectKind::DimensionTable, ObjectKind::Link],
            GranularityLevel::Detail => &[
                ObjectKind::FactKey,
                ObjectKind::FactAttribute,
                ObjectKind::DimensionKey,
                ObjectKind::DimensionAttribute,
            ],
        }
    }

    pub fn of(object: ObjectKind) -> GranularityLevel {
        match object {
            ObjectKind::Domain => GranularityLevel::Domain,
            ObjectKind::Model => GranularityLevel::Model,
            ObjectKind::FactTable | ObjectKind::DimensionTable | ObjectKind::Link => GranularityLevel::Structure,
            _ => GranularityLevel::Detail,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            GranularityLevel::Domain => "domain",
            GranularityLevel::Model => "model",
            GranularityLevel::Structure => "structure",
            GranularityLevel::Detail => "detail",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for GranularityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The fixed pattern of one level. Order within an episode always follows the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PotentialGraph {
    pub level: GranularityLevel,
    pub admitted_objects: BTreeSet<ObjectKind>,
}

impl PotentialGraph {
    pub fn admits(&self, object: ObjectKind) -> bool {
        self.admitted_objects.contains(&object)
    }
}

pub fn potential_graph(level: GranularityLevel) -> PotentialGraph {
    PotentialGraph {
        level,
        admitted_objects: level.admitted().iter().copied().collect(),
    }
}

/// A nonempty set of granularity levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scope(u8);

impl Scope {
    pub const STRUCTURE_DETAIL: Scope = Scope(0b1100);

    pub const fn single(level: GranularityLevel) -> Self {
        Scope(1 << (level as u8))
    }

    /// `None` for an empty set.
    pub fn of(levels: &[GranularityLevel]) -> Option<Self> {
        let bits = levels.iter().fold(0u8, |acc, l| acc | l.bit());
        (bits != 0).then_some(Scope(bits))
    }

    pub fn all() -> Self {
        Scope(0b1111)
    }

    pub fn contains(self, level: GranularityLevel) -> bool {
        self.0 & level.bit() != 0
    }

    pub fn levels(self) -> impl Iterator<Item = GranularityLevel> {
        GranularityLevel::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    pub fn admits(self, object: ObjectKind) -> bool {
        self.contains(GranularityLevel::of(object))
    }

    /// The single level, when the scope has exactly one.
    pub fn as_level(self) -> Option<GranularityLevel> {
        let mut it = self.levels();
        match (it.next(), it.next()) {
            (Some(l), None) => Some(l),
            _ => None,
        }
    }

    pub fn finest(self) -> GranularityLevel {
        self.levels().last().expect("scope is nonempty")
    }
}

impl From<GranularityLevel> for Scope {
    fn from(level: GranularityLevel) -> Self {
        Scope::single(level)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.levels().map(GranularityLevel::token).collect();
        f.write_str(&names.join("+"))
    }
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut levels = Vec::new();
        for part in s.split('+') {
            let level = GranularityLevel::ALL
                .into_iter()
                .find(|l| l.token() == part.trim())
                .ok_or_else(|| format!("unknown level {part:?}"))?;
            levels.push(level);
        }
        Scope::of(&levels).ok_or_else(|| "empty scope".to_string())
    }
}

impl Serialize for Scope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The comparison alphabet of the matcher: an item without its name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EpisodeLabel {
    pub process: ProcessKind,
    pub object: ObjectKind,
}

impl EpisodeLabel {
    pub fn of(process: ProcessKind) -> Self {
        EpisodeLabel {
            process,
            object: process.object(),
        }
    }
}

impl fmt::Display for EpisodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.process, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraceRef {
    pub user: String,
    pub session: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeItem {
    pub seq: u64,
    pub process: ProcessKind,
    pub object: ObjectKind,
    pub label: String,
    pub context: Option<String>,
}

impl EpisodeItem {
    pub fn episode_label(&self) -> EpisodeLabel {
        EpisodeLabel {
            process: self.process,
            object: self.object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub trace_ref: TraceRef,
    pub scope: Scope,
    pub items: Vec<EpisodeItem>,
    /// First and last event seq covered.
    pub span: (u64, u64),
}

impl Episode {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<EpisodeLabel> {
        self.items.iter().map(EpisodeItem::episode_label).collect()
    }

    pub fn last_label(&self) -> Option<EpisodeLabel> {
        self.items.last().map(EpisodeItem::episode_label)
    }

    /// Dump in the trace-document dialect with an added `level` field.
    pub fn to_document(&self) -> String {
        let doc = EpisodeDocument {
            events: self
                .items
                .iter()
                .map(|i| EpisodeRecord {
                    context: i.context.clone(),
                    label: i.label.clone(),
                    object: i.object,
                    process: i.process,
                    seq: i.seq,
                })
                .collect(),
            format_version: FORMAT_VERSION,
            level: self.scope,
            session: self.trace_ref.session.clone(),
            user: self.trace_ref.user.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("episode document serializes");
        out.push('\n');
        out
    }
}

#[derive(Serialize)]
struct EpisodeDocument {
    events: Vec<EpisodeRecord>,
    format_version: u32,
    level: Scope,
    session: String,
    user: String,
}

#[derive(Serialize)]
struct EpisodeRecord {
    context: Option<String>,
    label: String,
    object: ObjectKind,
    process: ProcessKind,
    seq: u64,
}

/// The subsequence of `trace` admitted by `scope`; `None` when empty.
pub fn merged_episode(trace: &GrossTrace, scope: Scope) -> Option<Episode> {
    let items: Vec<EpisodeItem> = trace
        .events()
        .iter()
        .filter(|e| scope.admits(e.object))
        .map(|e| EpisodeItem {
            seq: e.seq,
            process: e.process,
            object: e.object,
            label: e.label.clone(),
            context: e.context.clone(),
        })
        .collect();
    let span = (items.first()?.seq, items.last()?.seq);
    Some(Episode {
        trace_ref: TraceRef {
            user: trace.user().to_string(),
            session: trace.session().to_string(),
        },
        scope,
        items,
        span,
    })
}

pub fn extract_episode(trace: &GrossTrace, level: GranularityLevel) -> Option<Episode> {
    merged_episode(trace, Scope::single(level))
}

pub fn extract_all(trace: &GrossTrace) -> BTreeMap<GranularityLevel, Episode> {
    GranularityLevel::ALL
        .into_iter()
        .filter_map(|l| extract_episode(trace, l).map(|e| (l, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::trace::DesignAction;

    #[test]
    fn potential_graphs_partition_objects() {
        assert_eq!(
            potential_graph(GranularityLevel::Structure).admitted_objects,
            BTreeSet::from([ObjectKind::FactTable, ObjectKind::DimensionTable, ObjectKind::Link])
        );
        assert_eq!(
            potential_graph(GranularityLevel::Domain).admitted_objects,
            BTreeSet::from([ObjectKind::Domain])
        );
        let mut seen = BTreeSet::new();
        for l in GranularityLevel::ALL {
            for o in potential_graph(l).admitted_objects {
                assert!(seen.insert(o), "{o} admitted twice");
                assert_eq!(GranularityLevel::of(o), l);
            }
        }
        assert_eq!(seen.len(), 9);
    }

    #[test]
    fn sale_levels() {
        let t = samples::sale_trace("X", "s");
        let detail = extract_episode(&t, GranularityLevel::Detail).unwrap();
        // 2 fact keys + 1 fact attribute + 2 dimension keys + 3 dimension attributes
        assert_eq!(detail.len(), 8);
        let model = extract_episode(&t, GranularityLevel::Model).unwrap();
        assert_eq!(model.len(), 1);
        assert_eq!(
            (model.items[0].process, model.items[0].object, model.items[0].label.as_str()),
            (ProcessKind::SelectModel, ObjectKind::Model, "Star")
        );
        let all = extract_all(&t);
        assert_eq!(all.len(), 4);
        assert_eq!(all[&GranularityLevel::Structure].len(), 5);
        assert_eq!(all[&GranularityLevel::Domain].len(), 1);
    }

    #[test]
    fn empty_and_partial_traces() {
        let t = GrossTrace::new("X", "s");
        for l in GranularityLevel::ALL {
            assert!(extract_episode(&t, l).is_none());
        }
        let only_domain = GrossTrace::from_events(
            "X",
            "s",
            vec![DesignAction::new(ProcessKind::SelectDomain, "Commerce", None).into_event("s", 0)],
        )
        .unwrap();
        let all = extract_all(&only_domain);
        assert_eq!(all.keys().copied().collect::<Vec<_>>(), vec![GranularityLevel::Domain]);
    }

    #[test]
    fn merged_scopes() {
        let t = samples::sale_trace("X", "s");
        let sd = merged_episode(&t, Scope::STRUCTURE_DETAIL).unwrap();
        assert_eq!(sd.len(), 13);
        assert_eq!(sd.span, (2, 14));
        assert_eq!(
            merged_episode(&t, Scope::single(GranularityLevel::Domain)),
            extract_episode(&t, GranularityLevel::Domain)
        );
        let everything = merged_episode(&t, Scope::all()).unwrap();
        assert_eq!(everything.len(), 15);
        assert!(Scope::of(&[]).is_none());
    }

    #[test]
    fn scope_text_form() {
        assert_eq!(Scope::STRUCTURE_DETAIL.to_string(), "structure+detail");
        assert_eq!("structure+detail".parse::<Scope>().unwrap(), Scope::STRUCTURE_DETAIL);
        assert_eq!(Scope::STRUCTURE_DETAIL.finest(), GranularityLevel::Detail);
        assert_eq!(Scope::single(GranularityLevel::Model).as_level(), Some(GranularityLevel::Model));
        assert!("bogus".parse::<Scope>().is_err());
    }

    #[test]
    fn episode_dump_carries_level() {
        let t = samples::sale_trace("X", "s");
        let e = extract_episode(&t, GranularityLevel::Structure).unwrap();
        let doc = e.to_document();
        assert!(doc.contains("\"level\": \"structure\""));
        assert!(doc.contains("\"format_version\": 1"));
    }
}
