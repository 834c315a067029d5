use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use annotium::builtin::{builtin_registry, standard_system};
use annotium::engine::{Engine, RunOptions, Status};
use annotium::storage::{export_document, import_interchange, AnnotationDraft};
use annotium::{Attribute, AttributeValue, Document, Span};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn processed_figure2() -> Document {
    let text = std::fs::read_to_string(fixture("figure2.txt")).unwrap();
    let mut doc = Document::new("figure2", text);
    let engine = Engine::new(Arc::new(builtin_registry()));
    let system = standard_system(Some(&fixture("figure2.lex")));
    let report = engine.run_document(&system, &mut doc, &RunOptions::default()).unwrap();
    assert_eq!(report.status, Status::Ok);
    let link = std::fs::read(fixture("figure2.link.json")).unwrap();
    AnnotationDraft::from_json(&link).unwrap().add_to(&mut doc).unwrap();
    doc
}

/// The worked example written out row by row.
fn figure2_by_hand() -> Document {
    let mut doc = Document::new("figure2", "This is a simple sentence.");
    for (s, e, t, p) in [
        (0, 4, "EFW", "PN"),
        (5, 7, "ELW", "VB"),
        (8, 9, "ELW", "IDT"),
        (10, 16, "ELW", "ADJ"),
        (17, 25, "ELW", "NN"),
        (25, 26, "PUNC", "."),
    ] {
        doc.add_annotation(
            "token",
            vec![Span::new(s, e)],
            vec![Attribute::new("type", t), Attribute::new("pos", p)],
        )
        .unwrap();
    }
    doc.add_annotation(
        "sentence",
        vec![Span::new(0, 26)],
        vec![Attribute::new("constituents", AttributeValue::id_set(0..6))],
    )
    .unwrap();
    doc.add_annotation(
        "link",
        vec![Span::new(0, 4), Span::new(17, 25)],
        vec![Attribute::new("constituents", AttributeValue::id_set([0, 4]))],
    )
    .unwrap();
    doc
}

#[test]
fn pipeline_output_matches_golden_bytes() {
    let started = Instant::now();
    let doc = processed_figure2();
    let golden = std::fs::read(fixture("figure2.golden.json")).unwrap();
    assert_eq!(
        String::from_utf8(export_document(&doc).unwrap()).unwrap(),
        String::from_utf8(golden).unwrap()
    );
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn golden_matches_the_table() {
    let golden = std::fs::read(fixture("figure2.golden.json")).unwrap();
    assert_eq!(export_document(&figure2_by_hand()).unwrap(), golden);
    assert_eq!(import_interchange(&golden).unwrap(), figure2_by_hand());
}
