mod common;

use annotium::storage::{
    export_document, import_interchange, load_collection, save_collection, CompactDocument,
};
use annotium::{Collection, ModelError};
use common::*;

#[test]
fn queries_agree_with_linear_scans() {
    let mut rng = rng(7);
    for i in 0..150 {
        let doc = random_document(&mut rng, &format!("d{i}"), 200);
        assert!(doc.validate().is_empty());
        for ty in TYPES {
            assert_eq!(ids(doc.select_by_type(ty)), oracle_by_type(&doc, ty));
        }
        for (ty, name, value) in sample_values(&doc) {
            assert_eq!(
                ids(doc.select_matching(&ty, &name, &value)),
                oracle_matching(&doc, &ty, &name, &value)
            );
        }
        for (s, e) in sample_ranges(&mut rng, &doc, 10) {
            assert_eq!(ids(doc.select_overlapping(s, e).unwrap()), oracle_overlapping(&doc, s, e));
        }
        assert!(matches!(doc.select_overlapping(3, 2), Err(ModelError::InvalidRange { .. })));
    }
}

#[test]
fn compact_form_answers_identically() {
    let mut rng = rng(11);
    for i in 0..100 {
        let doc = random_document(&mut rng, &format!("d{i}"), 200);
        let compact = CompactDocument::from_document(&doc).unwrap();
        assert_eq!(compact.to_document(), doc);
        for ty in TYPES {
            assert_eq!(compact.select_by_type(ty), ids(doc.select_by_type(ty)));
        }
        for (ty, name, value) in sample_values(&doc) {
            assert_eq!(
                compact.select_matching(&ty, &name, &value),
                ids(doc.select_matching(&ty, &name, &value))
            );
        }
        for (s, e) in sample_ranges(&mut rng, &doc, 10) {
            assert_eq!(
                compact.select_overlapping(s, e).unwrap(),
                ids(doc.select_overlapping(s, e).unwrap())
            );
        }
    }
}

#[test]
fn random_documents_survive_export_and_disk() {
    let mut rng = rng(13);
    let mut c = Collection::new("random");
    for i in 0..60 {
        let doc = random_document(&mut rng, &format!("d{i}"), 200);
        assert_eq!(import_interchange(&export_document(&doc).unwrap()).unwrap(), doc);
        c.add_document(doc).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    save_collection(&c, dir.path()).unwrap();
    let loaded = load_collection(dir.path()).unwrap();
    assert_eq!(loaded, c);
    let first = snapshot(dir.path());
    save_collection(&loaded, dir.path()).unwrap();
    assert_eq!(snapshot(dir.path()), first);
}

fn snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
