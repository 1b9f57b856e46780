use std::fs;

use clover_core::corpus::{export_corpus, load_corpus, CorpusError, CorpusSnapshot, CorpusStore, INDEX_FILE};
use clover_core::samples::{self, Template};
use clover_core::trace::{self, GrossTrace};

fn template_trace(t: Template, i: usize) -> GrossTrace {
    let session = format!("{}-{i}", t.name());
    let events = samples::to_events(&t.actions("Commerce", &i.to_string()), &session);
    GrossTrace::from_events("U", session, events).unwrap()
}

fn five_records() -> CorpusStore {
    let mut store = CorpusStore::in_memory(3);
    for i in 0..5 {
        store.store_trace(&template_trace(Template::ALL[i % 3], i)).unwrap();
    }
    store
}

#[test]
fn export_then_load_is_identity() {
    let store = five_records();
    let dir = tempfile::tempdir().unwrap();
    export_corpus(&store.snapshot(), dir.path()).unwrap();
    let (loaded, report) = load_corpus(dir.path(), 3).unwrap();
    assert!(report.errors.is_empty());
    assert_eq!(report.loaded, 5);
    assert_eq!(&loaded, store.snapshot().as_ref());
    assert!(loaded.index_is_consistent());
}

#[test]
fn empty_directory_loads_empty() {
    let dir = tempfile::tempdir().unwrap();
    let (snap, report) = load_corpus(dir.path(), 3).unwrap();
    assert!(snap.is_empty() && report.errors.is_empty());
    assert_eq!(snap, CorpusSnapshot::default());
}

#[test]
fn corrupt_file_is_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = CorpusStore::in_memory(3);
    for i in 0..2 {
        store.store_trace(&template_trace(Template::StarTwoDimensions, i)).unwrap();
    }
    export_corpus(&store.snapshot(), dir.path()).unwrap();
    let bad = dir.path().join("zz.trace");
    fs::write(&bad, "{\n  \"events\": [\n    nope\n").unwrap();
    let (snap, report) = load_corpus(dir.path(), 3).unwrap();
    assert_eq!(snap.len(), 2);
    assert_eq!(report.errors.len(), 1);
    match &report.errors[0] {
        CorpusError::Parse { path, error } => {
            assert_eq!(path, &bad);
            assert!(error.to_string().contains("line 3"));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn stored_records_survive_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let t = samples::sale_trace("X", "s1");
    let id = {
        let (mut store, _) = CorpusStore::open(dir.path(), 3).unwrap();
        store.store_trace(&t).unwrap()
    };
    let file = dir.path().join(format!("{id}.trace"));
    assert_eq!(fs::read_to_string(&file).unwrap(), trace::serialize(&t));
    let index = fs::read_to_string(dir.path().join(INDEX_FILE)).unwrap();
    assert!(index.starts_with(id.as_str()));

    let (mut store, report) = CorpusStore::open(dir.path(), 3).unwrap();
    assert!(report.errors.is_empty());
    assert_eq!(store.len(), 1);
    assert_eq!(store.store_trace(&t).unwrap(), id);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn index_file_is_not_authoritative() {
    let dir = tempfile::tempdir().unwrap();
    {
        let (mut store, _) = CorpusStore::open(dir.path(), 3).unwrap();
        store.store_trace(&samples::sale_trace("X", "s1")).unwrap();
    }
    fs::write(dir.path().join(INDEX_FILE), "garbage\n").unwrap();
    let (store, report) = CorpusStore::open(dir.path(), 3).unwrap();
    assert!(report.errors.is_empty());
    assert_eq!(store.len(), 1);
}
