//! Reference sessions.
//!
//! [`sale_actions`] is the star schema around fact table "Sale" with
//! dimensions "Seller" and "Product". [`Template`] produces structurally
//! fixed sessions whose names vary by a suffix, for corpus generation.

use crate::clover::ProcessKind::{self, *};
use crate::episode::EpisodeLabel;
use crate::matcher::draft_action;
use crate::schema::{apply_action, ModelKind, SchemaDraft};
use crate::trace::{DesignAction, DesignEvent, GrossTrace};

fn act(process: ProcessKind, label: &str, context: Option<&str>) -> DesignAction {
    DesignAction::new(process, label, context)
}

/// The fifteen actions building the "Sale" star schema, in design order.
pub fn sale_actions() -> Vec<DesignAction> {
    vec![
        act(SelectDomain, "Commerce", None),
        act(SelectModel, "Star", Some("Commerce")),
        act(CreateFactTable, "Sale", Some("Star")),
        act(AddFactKey, "ID-Seller", Some("Sale")),
        act(AddFactKey, "ID-Product", Some("Sale")),
        act(AddFactAttribute, "Sale-Price", Some("Sale")),
        act(CreateDimensionTable, "Seller", Some("Star")),
        act(AddDimensionKey, "ID-Seller", Some("Seller")),
        act(AddDimensionAttribute, "Name-Seller", Some("Seller")),
        act(CreateDimensionTable, "Product", Some("Star")),
        act(AddDimensionKey, "ID-Product", Some("Product")),
        act(AddDimensionAttribute, "Name-Product", Some("Product")),
        act(AddDimensionAttribute, "Unit-Price", Some("Product")),
        act(AddLink, "Sale[ID-Seller]->Seller", Some("Star")),
        act(AddLink, "Sale[ID-Product]->Product", Some("Star")),
    ]
}

pub fn to_events(actions: &[DesignAction], session: &str) -> Vec<DesignEvent> {
    actions
        .iter()
        .enumerate()
        .map(|(i, a)| a.clone().into_event(session, i as u64))
        .collect()
}

pub fn sale_events(_user: &str, session: &str) -> Vec<DesignEvent> {
    to_events(&sale_actions(), session)
}

pub fn sale_trace(user: &str, session: &str) -> GrossTrace {
    GrossTrace::from_events(user, session, sale_events(user, session)).expect("sale session is well formed")
}

/// Replays actions onto an empty draft.
pub fn replay_draft(actions: &[DesignAction]) -> SchemaDraft {
    actions.iter().fold(SchemaDraft::empty(), |d, a| {
        apply_action(&d, a).expect("sample actions apply cleanly")
    })
}

pub fn sale_draft() -> SchemaDraft {
    replay_draft(&sale_actions())
}

/// A legal session driven by `picks`: domain and model selection, then one
/// action per pick, chosen among the steps the draft currently accepts.
pub fn walk(domain: &str, model: ModelKind, picks: &[u8]) -> Vec<DesignAction> {
    let mut actions = vec![
        act(SelectDomain, domain, None),
        act(SelectModel, model.token(), Some(domain)),
    ];
    let mut draft = replay_draft(&actions);
    for pick in picks {
        let options: Vec<(DesignAction, SchemaDraft)> = ProcessKind::ALL[2..]
            .iter()
            .filter_map(|p| draft_action(EpisodeLabel::of(*p), &draft))
            .filter_map(|a| apply_action(&draft, &a).ok().map(|d| (a, d)))
            .collect();
        let (a, d) = options[*pick as usize % options.len()].clone();
        actions.push(a);
        draft = d;
    }
    actions
}

/// Structural session templates used for synthetic corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Template {
    /// One fact table with two linked dimensions.
    StarTwoDimensions,
    /// One fact table with three linked dimensions.
    StarThreeDimensions,
    /// Two fact tables sharing two dimensions.
    ConstellationTwoFacts,
}

impl Template {
    pub const ALL: [Template; 3] = [
        Template::StarTwoDimensions,
        Template::StarThreeDimensions,
        Template::ConstellationTwoFacts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::StarTwoDimensions => "star-2dim",
            Template::StarThreeDimensions => "star-3dim",
            Template::ConstellationTwoFacts => "constellation-2fact",
        }
    }

    /// The template's actions in `domain`, with every table and field name
    /// suffixed by `variant`.
    pub fn actions(self, domain: &str, variant: &str) -> Vec<DesignAction> {
        let n = |base: &str| format!("{base}{variant}");
        let mut out = vec![act(SelectDomain, domain, None)];
        let (model, facts, dims) = match self {
            Template::StarTwoDimensions => ("Star", 1, 2),
            Template::StarThreeDimensions => ("Star", 1, 3),
            Template::ConstellationTwoFacts => ("Constellation", 2, 2),
        };
        out.push(act(SelectModel, model, Some(domain)));
        let key = |d: usize| n(&format!("ID-D{d}-"));
        let fact = |f: usize| n(&format!("Fact{f}-"));
        let dim = |d: usize| n(&format!("Dim{d}-"));
        for f in 1..=facts {
            out.push(act(CreateFactTable, &fact(f), Some(model)));
            for d in 1..=dims {
                out.push(act(AddFactKey, &key(d), Some(&fact(f))));
            }
            out.push(act(AddFactAttribute, &n(&format!("Measure{f}-")), Some(&fact(f))));
        }
        for d in 1..=dims {
            out.push(act(CreateDimensionTable, &dim(d), Some(model)));
            out.push(act(AddDimensionKey, &key(d), Some(&dim(d))));
            out.push(act(AddDimensionAttribute, &n(&format!("Name{d}-")), Some(&dim(d))));
        }
        for f in 1..=facts {
            for d in 1..=dims {
                let label = format!("{}[{}]->{}", fact(f), key(d), dim(d));
                out.push(act(AddLink, &label, Some(model)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::validate;

    #[test]
    fn walks_replay() {
        let picks: Vec<u8> = (0..40).map(|i| (i * 37 % 251) as u8).collect();
        let actions = walk("Commerce", ModelKind::Star, &picks);
        assert_eq!(actions.len(), 42);
        let events = to_events(&actions, "w");
        assert!(GrossTrace::from_events("U", "w", events).is_ok());
    }

    #[test]
    fn templates_produce_valid_drafts() {
        for t in Template::ALL {
            let draft = replay_draft(&t.actions("Commerce", "x"));
            let report = validate(&draft);
            assert!(report.ok, "{}: {:?}", t.name(), report.violations);
        }
    }
}
