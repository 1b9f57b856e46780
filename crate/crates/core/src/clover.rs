//! Clover node model: users, processes and objects.
//!
//! The use model links manipulated objects by contextualization
//! (domain <- model <- tables/links <- keys/attributes). The observation model
//! is the chain of processes in session order. The task model records which
//! process runs in the context of which, and is the source of guidance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::ObjectKind;
use crate::trace::DesignEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    User,
    Process,
    Object,
}

/// The closed set of design processes, one per [`ObjectKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    SelectDomain,
    SelectModel,
    CreateFactTable,
    AddFactKey,
    AddFactAttribute,
    CreateDimensionTable,
    AddDimensionKey,
    AddDimensionAttribute,
    AddLink,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 9] = [
        ProcessKind::SelectDomain,
        ProcessKind::SelectModel,
        ProcessKind::CreateFactTable,
        ProcessKind::AddFactKey,
        ProcessKind::AddFactAttribute,
        ProcessKind::CreateDimensionTable,
        ProcessKind::AddDimensionKey,
        ProcessKind::AddDimensionAttribute,
        ProcessKind::AddLink,
    ];

    /// The object this process manipulates. The pairing is a bijection.
    pub fn object(self) -> ObjectKind {
        match self {
            ProcessKind::SelectDomain => ObjectKind::Domain,
            ProcessKind::SelectModel => ObjectKind::Model,
            ProcessKind::CreateFactTable => ObjectKind::FactTable,
            ProcessKind::AddFactKey => ObjectKind::FactKey,
            ProcessKind::AddFactAttribute => ObjectKind::FactAttribute,
            ProcessKind::CreateDimensionTable => ObjectKind::DimensionTable,
            ProcessKind::AddDimensionKey => ObjectKind::DimensionKey,
            ProcessKind::AddDimensionAttribute => ObjectKind::DimensionAttribute,
            ProcessKind::AddLink => ObjectKind::Link,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ProcessKind::SelectDomain => "selectdomain",
            ProcessKind::SelectModel => "selectmodel",
            ProcessKind::CreateFactTable => "createfacttable",
            ProcessKind::AddFactKey => "addfactkey",
            ProcessKind::AddFactAttribute => "addfactattribute",
            ProcessKind::CreateDimensionTable => "createdimensiontable",
            ProcessKind::AddDimensionKey => "adddimensionkey",
            ProcessKind::AddDimensionAttribute => "adddimensionattribute",
            ProcessKind::AddLink => "addlink",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ProcessKind::SelectDomain => "Select the domain",
            ProcessKind::SelectModel => "Select the model",
            ProcessKind::CreateFactTable => "Create fact table",
            ProcessKind::AddFactKey => "Add fact key",
            ProcessKind::AddFactAttribute => "Add fact attribute",
            ProcessKind::CreateDimensionTable => "Create dimension table",
            ProcessKind::AddDimensionKey => "Add dimension key",
            ProcessKind::AddDimensionAttribute => "Add dimension attribute",
            ProcessKind::AddLink => "Add link",
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A node of the generic (uninstantiated) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbstractNode {
    pub kind: NodeKind,
    pub process: Option<ProcessKind>,
    pub object: Option<ObjectKind>,
}

impl AbstractNode {
    pub const USER: AbstractNode = AbstractNode {
        kind: NodeKind::User,
        process: None,
        object: None,
    };

    pub fn process(p: ProcessKind) -> Self {
        AbstractNode {
            kind: NodeKind::Process,
            process: Some(p),
            object: None,
        }
    }

    pub fn object(o: ObjectKind) -> Self {
        AbstractNode {
            kind: NodeKind::Object,
            process: None,
            object: Some(o),
        }
    }

    /// Every abstract node of the closed taxonomy: the user, nine processes, nine objects.
    pub fn all() -> Vec<AbstractNode> {
        std::iter::once(AbstractNode::USER)
            .chain(ProcessKind::ALL.into_iter().map(AbstractNode::process))
            .chain(ObjectKind::ALL.into_iter().map(AbstractNode::object))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// An instantiated node. Timestamps are logical ticks within one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteNode {
    pub id: NodeId,
    #[serde(rename = "abstract")]
    pub abstract_node: AbstractNode,
    pub label: String,
    pub timestamp: u64,
    pub session: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Contextualization,
    Composition,
    Instantiation,
    Manipulation,
    TemporalNext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CloverError {
    #[error("event {seq}: {object} {label:?} has no context object {context:?}")]
    OrphanObject {
        seq: u64,
        object: ObjectKind,
        label: String,
        context: String,
    },
}

/// One manipulated object in the use model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseNode {
    pub seq: u64,
    pub object: ObjectKind,
    pub label: String,
}

/// Objects plus their contextualization edges, stored as `(child, parent)` indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UseModel {
    pub nodes: Vec<UseNode>,
    pub contextualization: Vec<(usize, usize)>,
}

impl UseModel {
    /// The parent index an object would receive, without inserting it.
    ///
    /// Domains are roots. A model sits under the latest domain, tables and
    /// links under the latest model, keys and attributes under the latest
    /// table of the right kind whose label equals `context`.
    pub fn resolve_parent(
        &self,
        seq: u64,
        object: ObjectKind,
        label: &str,
        context: Option<&str>,
    ) -> Result<Option<usize>, CloverError> {
        let context = context.map(str::trim).filter(|c| !c.is_empty());
        let orphan = |ctx: &str| CloverError::OrphanObject {
            seq,
            object,
            label: label.to_string(),
            context: ctx.to_string(),
        };
        let latest = |kind: ObjectKind| self.nodes.iter().rposition(|n| n.object == kind);

        let parent = match object {
            ObjectKind::Domain => return Ok(None),
            ObjectKind::Model => {
                let p = latest(ObjectKind::Domain).ok_or_else(|| orphan(context.unwrap_or("domain")))?;
                if let Some(ctx) = context {
                    if self.nodes[p].label.trim() != ctx {
                        return Err(orphan(ctx));
                    }
                }
                p
            }
            ObjectKind::FactTable | ObjectKind::DimensionTable | ObjectKind::Link => {
                let p = latest(ObjectKind::Model).ok_or_else(|| orphan(context.unwrap_or("model")))?;
                if let Some(ctx) = context {
                    if !self.nodes[p].label.trim().eq_ignore_ascii_case(ctx) {
                        return Err(orphan(ctx));
                    }
                }
                p
            }
            ObjectKind::FactKey | ObjectKind::FactAttribute => {
                let ctx = context.ok_or_else(|| orphan(""))?;
                self.nodes
                    .iter()
                    .rposition(|n| n.object == ObjectKind::FactTable && n.label.trim() == ctx)
                    .ok_or_else(|| orphan(ctx))?
            }
            ObjectKind::DimensionKey | ObjectKind::DimensionAttribute => {
                let ctx = context.ok_or_else(|| orphan(""))?;
                self.nodes
                    .iter()
                    .rposition(|n| n.object == ObjectKind::DimensionTable && n.label.trim() == ctx)
                    .ok_or_else(|| orphan(ctx))?
            }
        };
        Ok(Some(parent))
    }

    /// Inserts the object of `event`, returning its index and parent index.
    pub fn push(&mut self, event: &DesignEvent) -> Result<(usize, Option<usize>), CloverError> {
        let parent = self.resolve_parent(event.seq, event.object, &event.label, event.context.as_deref())?;
        let idx = self.nodes.len();
        self.nodes.push(UseNode {
            seq: event.seq,
            object: event.object,
            label: event.label.clone(),
        });
        if let Some(p) = parent {
            self.contextualization.push((idx, p));
        }
        Ok((idx, parent))
    }

    pub fn parent_of(&self, idx: usize) -> Option<usize> {
        self.contextualization
            .iter()
            .find(|(child, _)| *child == idx)
            .map(|&(_, parent)| parent)
    }

    /// True when every non-domain node has exactly one parent and following
    /// parents always terminates.
    pub fn is_well_formed(&self) -> bool {
        let mut parents = vec![0usize; self.nodes.len()];
        for &(child, parent) in &self.contextualization {
            if child >= self.nodes.len() || parent >= self.nodes.len() {
                return false;
            }
            parents[child] += 1;
        }
        let single_parent = self.nodes.iter().zip(&parents).all(|(n, &count)| {
            if n.object == ObjectKind::Domain {
                count == 0
            } else {
                count == 1
            }
        });
        let acyclic = (0..self.nodes.len()).all(|start| {
            let mut cur = start;
            for _ in 0..=self.nodes.len() {
                match self.parent_of(cur) {
                    Some(p) => cur = p,
                    None => return true,
                }
            }
            false
        });
        single_parent && acyclic
    }
}

pub fn build_use_model(events: &[DesignEvent]) -> Result<UseModel, CloverError> {
    let mut model = UseModel::default();
    for event in events {
        model.push(event)?;
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedProcess {
    pub seq: u64,
    pub process: ProcessKind,
}

/// Processes in session order; `temporal_next` holds `(i, i + 1)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObservationModel {
    pub processes: Vec<ObservedProcess>,
    pub temporal_next: Vec<(usize, usize)>,
}

pub fn build_observation_model(events: &[DesignEvent]) -> ObservationModel {
    let processes: Vec<_> = events
        .iter()
        .map(|e| ObservedProcess {
            seq: e.seq,
            process: e.process,
        })
        .collect();
    let temporal_next = (1..processes.len()).map(|i| (i - 1, i)).collect();
    ObservationModel {
        processes,
        temporal_next,
    }
}

/// Task-model entry for one process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub process: ProcessKind,
    /// The process in whose context this one runs.
    pub context: Option<ProcessKind>,
    /// Processes this one is composed of.
    pub children: Vec<ProcessKind>,
    /// Processes that must already have happened, beyond the context chain.
    pub requires: Vec<ProcessKind>,
    pub note: String,
}

/// A process's canonical entry, plus the nested alternative where one exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDecomposition {
    pub canonical: TaskEntry,
    pub alternate: Option<Vec<TaskEntry>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskModel {
    entries: BTreeMap<ProcessKind, TaskEntry>,
}

fn entry(
    process: ProcessKind,
    context: Option<ProcessKind>,
    children: &[ProcessKind],
    requires: &[ProcessKind],
    note: &str,
) -> TaskEntry {
    TaskEntry {
        process,
        context,
        children: children.to_vec(),
        requires: requires.to_vec(),
        note: note.to_string(),
    }
}

impl TaskModel {
    /// Flat decomposition: keys and attributes both run in the context of
    /// their table's creation.
    pub fn canonical() -> Self {
        use ProcessKind::*;
        let entries = [
            entry(SelectDomain, None, &[], &[], "Choose the application domain first."),
            entry(
                SelectModel,
                Some(SelectDomain),
                &[],
                &[],
                "Choose star, snowflake or constellation within the selected domain.",
            ),
            entry(
                CreateFactTable,
                Some(SelectModel),
                &[AddFactKey, AddFactAttribute],
                &[],
                "Create a fact table; its keys and attributes are added in its context.",
            ),
            entry(
                AddFactKey,
                Some(CreateFactTable),
                &[],
                &[],
                "Add a key to an existing fact table; name it after the dimension it will reference.",
            ),
            entry(
                AddFactAttribute,
                Some(CreateFactTable),
                &[],
                &[],
                "Add a measure attribute to an existing fact table.",
            ),
            entry(
                CreateDimensionTable,
                Some(SelectModel),
                &[AddDimensionKey, AddDimensionAttribute],
                &[],
                "Create a dimension table; its key and attributes are added in its context.",
            ),
            entry(
                AddDimensionKey,
                Some(CreateDimensionTable),
                &[],
                &[],
                "Add the primary key of an existing dimension table.",
            ),
            entry(
                AddDimensionAttribute,
                Some(CreateDimensionTable),
                &[],
                &[],
                "Add a descriptive attribute to an existing dimension table.",
            ),
            entry(
                AddLink,
                Some(SelectModel),
                &[],
                &[CreateFactTable, AddFactKey, CreateDimensionTable, AddDimensionKey],
                "Link a fact key to the dimension table declaring a key with the same name.",
            ),
        ];
        TaskModel {
            entries: entries.into_iter().map(|e| (e.process, e)).collect(),
        }
    }

    /// Nested decomposition: attributes run in the context of key creation,
    /// which runs in the context of table creation.
    pub fn nested() -> Self {
        use ProcessKind::*;
        let mut model = Self::canonical();
        for (table, key, attr) in [
            (CreateFactTable, AddFactKey, AddFactAttribute),
            (CreateDimensionTable, AddDimensionKey, AddDimensionAttribute),
        ] {
            model.entries.get_mut(&table).unwrap().children = vec![key];
            model.entries.get_mut(&key).unwrap().children = vec![attr];
            model.entries.get_mut(&attr).unwrap().context = Some(key);
        }
        model
    }

    pub fn entry(&self, process: ProcessKind) -> &TaskEntry {
        &self.entries[&process]
    }

    pub fn entries(&self) -> impl Iterator<Item = &TaskEntry> {
        self.entries.values()
    }

    /// Context chain from the immediate context up to the root.
    pub fn context_chain(&self, process: ProcessKind) -> Vec<ProcessKind> {
        let mut chain = Vec::new();
        let mut cur = self.entry(process).context;
        while let Some(p) = cur {
            if chain.contains(&p) {
                break;
            }
            chain.push(p);
            cur = self.entry(p).context;
        }
        chain
    }

    /// Every process that must precede `process`: the transitive closure of
    /// context and `requires`, in declaration order.
    pub fn prior_steps(&self, process: ProcessKind) -> Vec<ProcessKind> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![process];
        while let Some(p) = stack.pop() {
            let e = self.entry(p);
            for q in e.context.iter().chain(&e.requires) {
                if seen.insert(*q) {
                    stack.push(*q);
                }
            }
        }
        seen.remove(&process);
        seen.into_iter().collect()
    }

    /// True when no process is (transitively) its own context.
    pub fn context_is_acyclic(&self) -> bool {
        ProcessKind::ALL.iter().all(|&p| !self.context_chain(p).contains(&p))
    }
}

impl Default for TaskModel {
    fn default() -> Self {
        Self::canonical()
    }
}

pub fn task_decompositions(process: ProcessKind) -> TaskDecomposition {
    let canonical = TaskModel::canonical().entry(process).clone();
    let alternate = match process {
        ProcessKind::CreateFactTable | ProcessKind::CreateDimensionTable => {
            let nested = TaskModel::nested();
            let chain: Vec<_> = std::iter::successors(Some(process), |p| nested.entry(*p).children.first().copied())
                .map(|p| nested.entry(p).clone())
                .collect();
            Some(chain)
        }
        _ => None,
    };
    TaskDecomposition { canonical, alternate }
}
