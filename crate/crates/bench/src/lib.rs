//! Fixtures shared by the matcher benchmarks.

use clover_core::samples::{self, Template};
use clover_core::{CorpusSnapshot, CorpusStore, GrossTrace};

/// `n` template sessions in one domain, cycling through the templates.
pub fn template_corpus(n: usize) -> CorpusSnapshot {
    let mut store = CorpusStore::in_memory(3);
    for i in 0..n {
        store.store_trace(&template_trace(Template::ALL[i % 3], i)).expect("template stores");
    }
    (*store.snapshot()).clone()
}

pub fn template_trace(t: Template, i: usize) -> GrossTrace {
    let session = format!("{}-{i}", t.name());
    let actions = t.actions("Commerce", &format!("v{i}"));
    GrossTrace::from_events("designer", &session, samples::to_events(&actions, &session)).expect("template replays")
}

/// The first `events` events of a fresh session.
pub fn prefix(t: Template, events: usize) -> GrossTrace {
    let full = t.actions("Commerce", "live");
    let actions = &full[..events.min(full.len())];
    GrossTrace::from_events("live", "live", samples::to_events(actions, "live")).expect("prefix replays")
}
