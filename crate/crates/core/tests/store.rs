mod common;

use std::fs;

use nefmath::features::FeatureVector;
use nefmath::store::*;
use nefmath::structure::{HeuristicRule, KnowledgeBase, Pattern};
use nefmath::StoreError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model_file(rng: &mut ChaCha8Rng) -> ModelFile {
    let f = 2 * rng.gen_range(2..=4);
    let (c, terms) = (rng.gen_range(1..=5), rng.gen_range(2..=5));
    let model = common::random_model(rng, f, c, terms, 10);
    ModelFile::new(model, Provenance::new("ga", &rng.gen::<u32>(), 7, 100))
}

#[test]
fn hundred_models_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let file = model_file(&mut rng);
        save_model(&path, &file).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, file);
        let bytes = fs::read(&path).unwrap();
        save_model(&path, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);
    }
}

#[test]
fn knowledge_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("knowledge.json");
    let mut kb = KnowledgeBase::builtin();
    kb.upsert_overlay_rule(relabel_rule("user-o", "o", "0"));
    let file = KnowledgeFile::new(kb);
    save_knowledge(&path, &file).unwrap();
    assert_eq!(load_knowledge(&path).unwrap(), file);
}

#[test]
fn injected_crashes_never_expose_a_partial_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let old = model_file(&mut rng);
    save_model(&path, &old).unwrap();
    for fault in [FaultPoint::MidTempWrite, FaultPoint::BeforeRename] {
        for _ in 0..20 {
            let new = model_file(&mut rng);
            let bytes = serde_json::to_vec_pretty(&new).unwrap();
            assert!(write_atomic_with_fault(&path, &bytes, Some(fault)).is_err());
            // the old document is intact
            assert_eq!(load_model(&path).unwrap(), old);
        }
    }
    // leftover temporaries are cleared when the store opens
    let temps = || fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp-")).count();
    assert_eq!(temps(), 40);
    let store = Store::open_dir(dir.path()).unwrap();
    assert_eq!(store.model(), &old);
    assert_eq!(temps(), 0);
}

#[test]
fn truncations_load_as_partial_never_as_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let file = model_file(&mut rng);
    let bytes = serde_json::to_vec_pretty(&file).unwrap();
    let step = (bytes.len() / 200).max(1);
    for cut in (0..bytes.len() - 1).step_by(step) {
        fs::write(&path, &bytes[..cut]).unwrap();
        match load_model(&path) {
            Err(StoreError::Partial { .. }) | Err(StoreError::Schema { .. }) => {}
            other => panic!("cut at {cut} gave {other:?}"),
        }
    }
    fs::write(&path, b"").unwrap();
    assert!(matches!(load_model(&path), Err(StoreError::Partial { .. })));
}

#[test]
fn version_and_schema_errors_are_distinguished() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut doc = serde_json::to_value(model_file(&mut rng)).unwrap();
    doc["version"] = 9.into();
    fs::write(&path, doc.to_string()).unwrap();
    assert!(matches!(load_model(&path), Err(StoreError::Version { found: 9, expected: 1, .. })));

    doc["version"] = 1.into();
    doc["model"]["partition"][0][0]["sigma"] = "wide".into();
    fs::write(&path, doc.to_string()).unwrap();
    match load_model(&path) {
        Err(StoreError::Schema { pointer, .. }) => assert_eq!(pointer, "/model/partition/0/0/sigma"),
        other => panic!("{other:?}"),
    }

    doc["model"]["partition"][0][0]["sigma"] = 0.0.into();
    fs::write(&path, doc.to_string()).unwrap();
    assert!(matches!(load_model(&path), Err(StoreError::Schema { .. })));

    doc.as_object_mut().unwrap().remove("version");
    fs::write(&path, doc.to_string()).unwrap();
    match load_model(&path) {
        Err(StoreError::Schema { pointer, .. }) => assert_eq!(pointer, "/version"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn second_writer_is_locked_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    save_model(&dir.path().join("model.json"), &model_file(&mut rng)).unwrap();
    let first = Store::open_dir(dir.path()).unwrap();
    assert!(matches!(Store::open_dir(dir.path()), Err(StoreError::Locked)));
    drop(first);
    Store::open_dir(dir.path()).unwrap();
}

fn relabel_rule(id: &str, from: &str, to: &str) -> HeuristicRule {
    HeuristicRule { id: id.into(), components: vec![Pattern::Label(from.into())], predicates: vec![], result: to.into(), priority: 1, target: Some(0) }
}

#[test]
fn corrections_persist_and_overlay_never_touches_base_rules() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let file = model_file(&mut rng);
    let f = file.model.input_count;
    save_model(&dir.path().join("model.json"), &file).unwrap();
    let base = KnowledgeBase::builtin();
    {
        let mut store = Store::open_dir(dir.path()).unwrap();
        let x = FeatureVector(vec![0.5; f]);
        assert!(matches!(
            store.record_correction(&Correction { sample: Some((x.clone(), "new".into())), ..Correction::default() }),
            Err(StoreError::UnknownLabel(_))
        ));
        assert!(!dir.path().join("corrections.json").exists());
        store.record_correction(&Correction { sample: Some((x.clone(), "c0".into())), ..Correction::default() }).unwrap();
        store
            .record_correction(&Correction { sample: Some((x, "new".into())), rules: vec![relabel_rule("user-o", "o", "0")], add_class: true })
            .unwrap();
        // overriding a shipped rule id goes to the overlay
        let mut eq = base.rules.iter().find(|r| r.id == "equals").unwrap().clone();
        eq.priority += 5;
        store.record_correction(&Correction { rules: vec![eq], ..Correction::default() }).unwrap();
    }
    let store = Store::open_dir(dir.path()).unwrap();
    assert_eq!(store.corrections().samples.len(), 2);
    assert_eq!(store.model().model.class_index("new"), Some(file.model.class_count()));
    let kb = &store.knowledge().knowledge;
    assert_eq!(kb.rules, base.rules);
    assert_eq!(kb.position_table, base.position_table);
    let eff = kb.effective_rules();
    assert!(eff.iter().any(|r| r.id == "user-o"));
    assert_eq!(eff.iter().filter(|r| r.id == "equals").count(), 1);
    assert_eq!(eff.iter().find(|r| r.id == "equals").unwrap().priority, base.rules.iter().find(|r| r.id == "equals").unwrap().priority + 5);
}

#[test]
fn missing_model_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Store::open_dir(dir.path()), Err(StoreError::Io { .. })));
}
