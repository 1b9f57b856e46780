//! Data-warehouse schema drafts.
//!
//! A [`SchemaDraft`] is the schema a designer is building: a domain, a model
//! kind, fact and dimension tables and the links between them. Drafts only
//! change through [`apply_action`], which either applies a [`DesignAction`]
//! completely or rejects it. [`validate`] reports model-kind and referential
//! rule violations without failing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clover::ProcessKind;
use crate::trace::DesignAction;

/// The closed set of objects a designer can manipulate.
///
/// Declaration order is the total order used for deterministic tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Domain,
    Model,
    FactTable,
    DimensionTable,
    FactKey,
    FactAttribute,
    DimensionKey,
    DimensionAttribute,
    Link,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 9] = [
        ObjectKind::Domain,
        ObjectKind::Model,
        ObjectKind::FactTable,
        ObjectKind::DimensionTable,
        ObjectKind::FactKey,
        ObjectKind::FactAttribute,
        ObjectKind::DimensionKey,
        ObjectKind::DimensionAttribute,
        ObjectKind::Link,
    ];

    /// Lowercase token used in documents.
    pub fn token(self) -> &'static str {
        match self {
            ObjectKind::Domain => "domain",
            ObjectKind::Model => "model",
            ObjectKind::FactTable => "facttable",
            ObjectKind::DimensionTable => "dimensiontable",
            ObjectKind::FactKey => "factkey",
            ObjectKind::FactAttribute => "factattribute",
            ObjectKind::DimensionKey => "dimensionkey",
            ObjectKind::DimensionAttribute => "dimensionattribute",
            ObjectKind::Link => "link",
        }
    }

    /// Human-readable name, e.g. "Fact key".
    pub fn title(self) -> &'static str {
        match self {
            ObjectKind::Domain => "Domain",
            ObjectKind::Model => "Model",
            ObjectKind::FactTable => "Fact table",
            ObjectKind::DimensionTable => "Dimension table",
            ObjectKind::FactKey => "Fact key",
            ObjectKind::FactAttribute => "Fact attribute",
            ObjectKind::DimensionKey => "Dimension key",
            ObjectKind::DimensionAttribute => "Dimension attribute",
            ObjectKind::Link => "Link",
        }
    }

    /// The process that manipulates this object (inverse of [`ProcessKind::object`]).
    pub fn process(self) -> ProcessKind {
        match self {
            ObjectKind::Domain => ProcessKind::SelectDomain,
            ObjectKind::Model => ProcessKind::SelectModel,
            ObjectKind::FactTable => ProcessKind::CreateFactTable,
            ObjectKind::DimensionTable => ProcessKind::CreateDimensionTable,
            ObjectKind::FactKey => ProcessKind::AddFactKey,
            ObjectKind::FactAttribute => ProcessKind::AddFactAttribute,
            ObjectKind::DimensionKey => ProcessKind::AddDimensionKey,
            ObjectKind::DimensionAttribute => ProcessKind::AddDimensionAttribute,
            ObjectKind::Link => ProcessKind::AddLink,
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Star,
    Snowflake,
    Constellation,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Star, ModelKind::Snowflake, ModelKind::Constellation];

    pub fn token(self) -> &'static str {
        match self {
            ModelKind::Star => "star",
            ModelKind::Snowflake => "snowflake",
            ModelKind::Constellation => "constellation",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ModelKind {
    type Err = SchemaError;

    /// Case-insensitive, so a trace label such as "Star" parses.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "star" => Ok(ModelKind::Star),
            "snowflake" => Ok(ModelKind::Snowflake),
            "constellation" => Ok(ModelKind::Constellation),
            _ => Err(SchemaError::UnknownModel(s.to_string())),
        }
    }
}

/// A fact or dimension table. Keys and attributes keep insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub keys: Vec<String>,
    pub attributes: Vec<String>,
}

pub type FactTable = Table;
pub type DimensionTable = Table;

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Table {
            name: name.into(),
            keys: Vec::new(),
            attributes: Vec::new(),
        }
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.keys.iter().chain(&self.attributes).any(|f| f == name)
    }

    pub fn has_key(&self, name: &str) -> bool {
        self.keys.iter().any(|k| k == name)
    }
}

/// A reference from a table's key to the dimension table declaring the same key.
///
/// `dimension_link` marks snowflake links whose source is itself a dimension table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub fact_table: String,
    pub fact_key: String,
    pub dimension_table: String,
    #[serde(default)]
    pub dimension_link: bool,
}

/// Parsed form of a link label: `Source[Key]->Target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub source: String,
    pub key: String,
    pub target: String,
}

impl LinkSpec {
    pub fn new(source: impl Into<String>, key: impl Into<String>, target: impl Into<String>) -> Self {
        LinkSpec {
            source: source.into(),
            key: key.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]->{}", self.source, self.key, self.target)
    }
}

impl FromStr for LinkSpec {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || SchemaError::MalformedLinkLabel(s.to_string());
        let (left, target) = s.split_once("->").ok_or_else(malformed)?;
        let left = left.trim();
        let open = left.find('[').ok_or_else(malformed)?;
        if !left.ends_with(']') {
            return Err(malformed());
        }
        let source = left[..open].trim();
        let key = left[open + 1..left.len() - 1].trim();
        let target = target.trim();
        if source.is_empty() || key.is_empty() || target.is_empty() {
            return Err(malformed());
        }
        Ok(LinkSpec::new(source, key, target))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("name must not be empty")]
    EmptyName,
    #[error("name {0:?} uses a reserved character sequence")]
    ReservedName(String),
    #[error("{subject:?} needs context {context:?}, which does not exist")]
    MissingContext { subject: String, context: String },
    #[error("name {0:?} is already used")]
    DuplicateName(String),
    #[error("{subject:?} cannot be added to {context:?}: expected a {expected}")]
    WrongKindContext {
        subject: String,
        context: String,
        expected: ObjectKind,
    },
    #[error("process {process} cannot manipulate object {object}")]
    IllegalPairing { process: ProcessKind, object: ObjectKind },
    #[error("unknown model kind {0:?}")]
    UnknownModel(String),
    #[error("{0} already selected")]
    AlreadySelected(ObjectKind),
    #[error("link label {0:?} is not of the form Source[Key]->Target")]
    MalformedLinkLabel(String),
}

impl SchemaError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaError::EmptyName => "empty_name",
            SchemaError::ReservedName(_) => "reserved_name",
            SchemaError::MissingContext { .. } => "missing_context",
            SchemaError::DuplicateName(_) => "duplicate_name",
            SchemaError::WrongKindContext { .. } => "wrong_kind_context",
            SchemaError::IllegalPairing { .. } => "illegal_pairing",
            SchemaError::UnknownModel(_) => "unknown_model",
            SchemaError::AlreadySelected(_) => "already_selected",
            SchemaError::MalformedLinkLabel(_) => "malformed_link_label",
        }
    }
}

/// Trims `raw` and rejects empty names.
pub fn normalize_name(raw: &str) -> Result<String, SchemaError> {
    let name = raw.trim();
    if name.is_empty() {
        return Err(SchemaError::EmptyName);
    }
    Ok(name.to_string())
}

fn check_table_name(name: &str) -> Result<(), SchemaError> {
    if name.contains('[') || name.contains("->") {
        return Err(SchemaError::ReservedName(name.to_string()));
    }
    Ok(())
}

fn check_field_name(name: &str) -> Result<(), SchemaError> {
    if name.contains("->") {
        return Err(SchemaError::ReservedName(name.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SchemaDraft {
    pub domain: Option<String>,
    pub model: Option<ModelKind>,
    pub fact_tables: Vec<FactTable>,
    pub dimension_tables: Vec<DimensionTable>,
    pub links: Vec<Link>,
}

/// Which table list a name resolved to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TableRef {
    Fact(usize),
    Dimension(usize),
}

impl SchemaDraft {
    /// A draft with nothing selected yet, as held by a fresh session.
    pub fn empty() -> Self {
        SchemaDraft::default()
    }

    pub fn is_empty(&self) -> bool {
        *self == SchemaDraft::default()
    }

    pub fn fact_table(&self, name: &str) -> Option<&FactTable> {
        self.fact_tables.iter().find(|t| t.name == name)
    }

    pub fn dimension_table(&self, name: &str) -> Option<&DimensionTable> {
        self.dimension_tables.iter().find(|t| t.name == name)
    }

    pub fn has_table(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    fn lookup(&self, name: &str) -> Option<TableRef> {
        if let Some(i) = self.fact_tables.iter().position(|t| t.name == name) {
            return Some(TableRef::Fact(i));
        }
        self.dimension_tables
            .iter()
            .position(|t| t.name == name)
            .map(TableRef::Dimension)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("draft serializes")
    }
}

/// Starts a draft for `domain` with the model already chosen.
pub fn new_draft(domain: &str, model: ModelKind) -> Result<SchemaDraft, SchemaError> {
    let domain = normalize_name(domain)?;
    Ok(SchemaDraft {
        domain: Some(domain),
        model: Some(model),
        ..SchemaDraft::default()
    })
}

/// Applies `action` to a copy of `draft`.
///
/// The input is never modified; a rejected action leaves no partial state.
pub fn apply_action(draft: &SchemaDraft, action: &DesignAction) -> Result<SchemaDraft, SchemaError> {
    if action.process.object() != action.object {
        return Err(SchemaError::IllegalPairing {
            process: action.process,
            object: action.object,
        });
    }
    let label = normalize_name(&action.label)?;
    let context = action.context.as_deref().map(str::trim).filter(|c| !c.is_empty());
    let mut next = draft.clone();

    match action.process {
        ProcessKind::SelectDomain => {
            if draft.domain.is_some() {
                return Err(SchemaError::AlreadySelected(ObjectKind::Domain));
            }
            next.domain = Some(label);
        }
        ProcessKind::SelectModel => {
            let domain = draft.domain.as_deref().ok_or_else(|| SchemaError::MissingContext {
                subject: label.clone(),
                context: context.unwrap_or("domain").to_string(),
            })?;
            if let Some(ctx) = context {
                if ctx != domain {
                    return Err(SchemaError::MissingContext {
                        subject: label,
                        context: ctx.to_string(),
                    });
                }
            }
            if draft.model.is_some() {
                return Err(SchemaError::AlreadySelected(ObjectKind::Model));
            }
            next.model = Some(label.parse()?);
        }
        ProcessKind::CreateFactTable | ProcessKind::CreateDimensionTable => {
            require_model(draft, &label, context)?;
            check_table_name(&label)?;
            if draft.has_table(&label) {
                return Err(SchemaError::DuplicateName(label));
            }
            if action.process == ProcessKind::CreateFactTable {
                next.fact_tables.push(Table::new(label));
            } else {
                next.dimension_tables.push(Table::new(label));
            }
        }
        ProcessKind::AddFactKey
        | ProcessKind::AddFactAttribute
        | ProcessKind::AddDimensionKey
        | ProcessKind::AddDimensionAttribute => {
            check_field_name(&label)?;
            let wants_fact = matches!(
                action.process,
                ProcessKind::AddFactKey | ProcessKind::AddFactAttribute
            );
            let ctx = context.ok_or_else(|| SchemaError::MissingContext {
                subject: label.clone(),
                context: String::new(),
            })?;
            let table = match (draft.lookup(ctx), wants_fact) {
                (Some(TableRef::Fact(i)), true) => &mut next.fact_tables[i],
                (Some(TableRef::Dimension(i)), false) => &mut next.dimension_tables[i],
                (Some(_), _) => {
                    return Err(SchemaError::WrongKindContext {
                        subject: label,
                        context: ctx.to_string(),
                        expected: if wants_fact {
                            ObjectKind::FactTable
                        } else {
                            ObjectKind::DimensionTable
                        },
                    })
                }
                (None, _) => {
                    return Err(SchemaError::MissingContext {
                        subject: label,
                        context: ctx.to_string(),
                    })
                }
            };
            if table.has_field(&label) {
                return Err(SchemaError::DuplicateName(label));
            }
            if matches!(action.process, ProcessKind::AddFactKey | ProcessKind::AddDimensionKey) {
                table.keys.push(label);
            } else {
                table.attributes.push(label);
            }
        }
        ProcessKind::AddLink => {
            require_model(draft, &label, context)?;
            let spec: LinkSpec = label.parse()?;
            let dimension_link = match draft.lookup(&spec.source) {
                Some(TableRef::Fact(_)) => false,
                Some(TableRef::Dimension(_)) => true,
                None => {
                    return Err(SchemaError::MissingContext {
                        subject: label,
                        context: spec.source,
                    })
                }
            };
            match draft.lookup(&spec.target) {
                Some(TableRef::Dimension(_)) if spec.target != spec.source => {}
                Some(_) => {
                    return Err(SchemaError::WrongKindContext {
                        subject: label,
                        context: spec.target,
                        expected: ObjectKind::DimensionTable,
                    })
                }
                None => {
                    return Err(SchemaError::MissingContext {
                        subject: label,
                        context: spec.target,
                    })
                }
            }
            let link = Link {
                fact_table: spec.source,
                fact_key: spec.key,
                dimension_table: spec.target,
                dimension_link,
            };
            if draft.links.iter().any(|l| {
                l.fact_table == link.fact_table
                    && l.fact_key == link.fact_key
                    && l.dimension_table == link.dimension_table
            }) {
                return Err(SchemaError::DuplicateName(label));
            }
            next.links.push(link);
        }
    }
    Ok(next)
}

/// Tables and links live in the context of the selected model.
fn require_model(draft: &SchemaDraft, label: &str, context: Option<&str>) -> Result<(), SchemaError> {
    let Some(model) = draft.model else {
        return Err(SchemaError::MissingContext {
            subject: label.to_string(),
            context: context.unwrap_or("model").to_string(),
        });
    };
    if let Some(ctx) = context {
        if ctx.parse::<ModelKind>().ok() != Some(model) {
            return Err(SchemaError::MissingContext {
                subject: label.to_string(),
                context: ctx.to_string(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    MissingDomain,
    MissingModel,
    DuplicateTable,
    DuplicateField,
    DanglingLink,
    UndeclaredKey,
    KeyMismatch,
    StarSingleFact,
    StarNoDimension,
    UnlinkedDimension,
    DimensionLinkNotAllowed,
    ConstellationFactCount,
    ConstellationNoSharedDimension,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

/// Checks `draft` against referential rules and its model kind's shape rules.
///
/// Star: one fact table, at least one dimension, every dimension linked,
/// no dimension-to-dimension links. Snowflake: as star but dimension links
/// allowed. Constellation: two or more fact tables and a dimension shared by
/// at least two of them.
pub fn validate(draft: &SchemaDraft) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |code, subject: &str, message: String| {
        out.push(Violation {
            code,
            message,
            subject: subject.to_string(),
        })
    };

    match &draft.domain {
        None => push(ViolationCode::MissingDomain, "", "no domain selected".into()),
        Some(d) if d.trim().is_empty() => {
            push(ViolationCode::MissingDomain, "", "domain name is empty".into())
        }
        Some(_) => {}
    }
    if draft.model.is_none() {
        push(ViolationCode::MissingModel, "", "no model selected".into());
    }

    let mut seen = BTreeSet::new();
    for t in draft.fact_tables.iter().chain(&draft.dimension_tables) {
        if !seen.insert(t.name.as_str()) {
            push(
                ViolationCode::DuplicateTable,
                &t.name,
                format!("table {:?} is declared more than once", t.name),
            );
        }
        let mut fields = BTreeSet::new();
        for f in t.keys.iter().chain(&t.attributes) {
            if !fields.insert(f.as_str()) {
                push(
                    ViolationCode::DuplicateField,
                    &t.name,
                    format!("field {f:?} is declared more than once in {:?}", t.name),
                );
            }
        }
    }

    for link in &draft.links {
        let subject = LinkSpec::new(&link.fact_table, &link.fact_key, &link.dimension_table).to_string();
        let source = if link.dimension_link {
            draft.dimension_table(&link.fact_table)
        } else {
            draft.fact_table(&link.fact_table)
        };
        let target = draft.dimension_table(&link.dimension_table);
        match (source, target) {
            (Some(src), Some(dst)) => {
                if !src.has_key(&link.fact_key) {
                    push(
                        ViolationCode::UndeclaredKey,
                        &subject,
                        format!("{:?} does not declare key {:?}", src.name, link.fact_key),
                    );
                }
                if !dst.has_key(&link.fact_key) {
                    push(
                        ViolationCode::KeyMismatch,
                        &subject,
                        format!("{:?} has no key named {:?}", dst.name, link.fact_key),
                    );
                }
            }
            _ => push(
                ViolationCode::DanglingLink,
                &subject,
                "link references a table that is not in the draft".into(),
            ),
        }
    }

    let linked: BTreeSet<&str> = draft.links.iter().map(|l| l.dimension_table.as_str()).collect();
    match draft.model {
        Some(ModelKind::Star) | Some(ModelKind::Snowflake) => {
            if draft.fact_tables.len() != 1 {
                push(
                    ViolationCode::StarSingleFact,
                    "",
                    format!("expected exactly one fact table, found {}", draft.fact_tables.len()),
                );
            }
            if draft.dimension_tables.is_empty() {
                push(ViolationCode::StarNoDimension, "", "no dimension table".into());
            }
            for d in &draft.dimension_tables {
                if !linked.contains(d.name.as_str()) {
                    push(
                        ViolationCode::UnlinkedDimension,
                        &d.name,
                        format!("dimension {:?} is not linked", d.name),
                    );
                }
            }
            if draft.model == Some(ModelKind::Star) {
                for l in draft.links.iter().filter(|l| l.dimension_link) {
                    push(
                        ViolationCode::DimensionLinkNotAllowed,
                        &l.fact_table,
                        "star schemas link dimensions to the fact table only".into(),
                    );
                }
            }
        }
        Some(ModelKind::Constellation) => {
            if draft.fact_tables.len() < 2 {
                push(
                    ViolationCode::ConstellationFactCount,
                    "",
                    format!("expected at least two fact tables, found {}", draft.fact_tables.len()),
                );
            }
            let mut facts_per_dim: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for l in draft.links.iter().filter(|l| !l.dimension_link) {
                facts_per_dim
                    .entry(l.dimension_table.as_str())
                    .or_default()
                    .insert(l.fact_table.as_str());
            }
            if !facts_per_dim.values().any(|facts| facts.len() >= 2) {
                push(
                    ViolationCode::ConstellationNoSharedDimension,
                    "",
                    "no dimension table is shared by two fact tables".into(),
                );
            }
            for l in draft.links.iter().filter(|l| l.dimension_link) {
                push(
                    ViolationCode::DimensionLinkNotAllowed,
                    &l.fact_table,
                    "constellation schemas link dimensions to fact tables only".into(),
                );
            }
        }
        None => {}
    }

    ValidationReport::from_violations(out)
}
