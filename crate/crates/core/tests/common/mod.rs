//! Random document generation and brute-force query oracles shared by the
//! property-style integration tests.
#![allow(dead_code)]

use annotium::{
    Annotation, AnnotationId, Attribute, AttributeValue, Document, Span,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const TYPES: [&str; 4] = ["token", "sentence", "entity", "link"];
pub const NAMES: [&str; 3] = ["pos", "tags", "ref"];
const WORDS: [&str; 8] = ["alpha", "βήτα", "gamma", "δέλτα", "ε", "zeta", "ηta", "θ"];
const VALUES: [&str; 4] = ["NN", "VB", "ADJ", "."];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A valid document with up to `max_annotations` annotations of up to five
/// spans each, including zero-width spans and multi-byte text.
pub fn random_document(rng: &mut StdRng, id: &str, max_annotations: usize) -> Document {
    let n_words = rng.random_range(0..60);
    let text: Vec<&str> = (0..n_words).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
    let mut doc = Document::new(id, text.join(" "));
    let len = doc.len_chars();
    let count = rng.random_range(0..=max_annotations);
    for _ in 0..count {
        let n_spans = rng.random_range(1..=5);
        let mut cuts: Vec<usize> = (0..n_spans * 2).map(|_| rng.random_range(0..=len)).collect();
        cuts.sort_unstable();
        let mut spans: Vec<Span> = cuts.chunks(2).map(|c| Span::new(c[0], c[1])).collect();
        spans.dedup();
        // Identical zero-width neighbours collapse; touching spans are fine.
        let ty = TYPES[rng.random_range(0..TYPES.len())];
        let mut attrs = Vec::new();
        for name in NAMES {
            if !rng.random_bool(0.5) {
                continue;
            }
            let value = match name {
                "pos" => AttributeValue::from(VALUES[rng.random_range(0..VALUES.len())]),
                "tags" => AttributeValue::string_set(
                    (0..rng.random_range(0..3)).map(|_| VALUES[rng.random_range(0..VALUES.len())]),
                ),
                _ => {
                    let next = doc.next_id().0;
                    if next == 0 {
                        continue;
                    }
                    let live: Vec<u64> = doc.annotations().map(|a| a.id().0).collect();
                    if live.is_empty() {
                        continue;
                    }
                    if rng.random_bool(0.5) {
                        AttributeValue::AnnotationId(AnnotationId(live[rng.random_range(0..live.len())]))
                    } else {
                        AttributeValue::id_set(
                            (0..rng.random_range(0..4)).map(|_| live[rng.random_range(0..live.len())]),
                        )
                    }
                }
            };
            attrs.push(Attribute::new(name, value));
        }
        doc.add_annotation(ty, spans, attrs).unwrap();
    }
    // Nothing refers forward, so the newest annotation can always go; this
    // leaves next_id above every live id.
    if rng.random_bool(0.2) {
        if let Some(last) = doc.annotations().map(|a| a.id()).max() {
            doc.remove_annotation(last).unwrap();
        }
    }
    if rng.random_bool(0.3) {
        doc.put_attribute(Attribute::new("source", "random"));
    }
    doc
}

fn canonical(mut v: Vec<&Annotation>) -> Vec<AnnotationId> {
    v.sort_by_key(|a| (a.spans()[0].start, a.spans()[0].end, a.id()));
    v.into_iter().map(|a| a.id()).collect()
}

pub fn oracle_by_type(doc: &Document, ty: &str) -> Vec<AnnotationId> {
    canonical(doc.annotations().filter(|a| a.annotation_type() == ty).collect())
}

pub fn oracle_matching(doc: &Document, ty: &str, name: &str, value: &AttributeValue) -> Vec<AnnotationId> {
    canonical(
        doc.annotations()
            .filter(|a| a.annotation_type() == ty)
            .filter(|a| a.attributes().iter().any(|(n, v)| n == name && v == value))
            .collect(),
    )
}

/// The documented predicate, spelled out: a span `[s,e)` hits `[start,end)`
/// when `s < end && e > start`; a zero-width query `[p,p)` hits spans with
/// `s <= p < e` and zero-width spans at `p`.
pub fn oracle_overlapping(doc: &Document, start: usize, end: usize) -> Vec<AnnotationId> {
    let hit = |s: &Span| {
        if start == end {
            (s.start <= start && start < s.end) || (s.start == start && s.end == start)
        } else {
            s.start < end && s.end > start
        }
    };
    canonical(doc.annotations().filter(|a| a.spans().iter().any(hit)).collect())
}

pub fn ids(v: Vec<&Annotation>) -> Vec<AnnotationId> {
    v.into_iter().map(|a| a.id()).collect()
}

/// Query parameters worth trying on `doc`: every type, a sample of attribute
/// values and a spread of ranges including zero-width ones.
pub fn sample_values(doc: &Document) -> Vec<(String, String, AttributeValue)> {
    let mut out = Vec::new();
    for a in doc.annotations().take(20) {
        for (n, v) in a.attributes().iter() {
            out.push((a.annotation_type().to_owned(), n.to_owned(), v.clone()));
        }
    }
    out.push(("token".into(), "pos".into(), AttributeValue::from("NN")));
    out
}

pub fn sample_ranges(rng: &mut StdRng, doc: &Document, n: usize) -> Vec<(usize, usize)> {
    let len = doc.len_chars();
    let mut out = vec![(0, 0), (0, len), (len, len)];
    for _ in 0..n {
        let a = rng.random_range(0..=len + 1);
        let b = rng.random_range(0..=len + 1);
        out.push((a.min(b), a.max(b)));
        out.push((a, a));
    }
    out
}
