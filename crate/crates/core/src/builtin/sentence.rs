use crate::model::{AnnotationId, Attribute, AttributeValue, Document, Span};

use super::tokenizer::TOKEN;

pub const SENTENCE: &str = "sentence";
pub const CONSTITUENTS: &str = "constituents";

fn is_terminator(text: &str) -> bool {
    matches!(text, "." | "!" | "?")
}

/// Groups tokens into sentences ending at `.`, `!` or `?` (or at the end of
/// the document). Each sentence spans its first to last token and lists
/// the token ids as `constituents`. There is no abbreviation handling.
pub fn split_sentences(doc: &mut Document) -> Vec<AnnotationId> {
    let mut groups: Vec<Vec<(AnnotationId, Span)>> = Vec::new();
    let mut current = Vec::new();
    for tok in doc.select_by_type(TOKEN) {
        let Some(&span) = tok.spans().first() else {
            continue;
        };
        current.push((tok.id(), span));
        let last = tok.spans().last().copied().unwrap_or(span);
        if doc.span_text(last).is_some_and(is_terminator) {
            groups.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    groups
        .into_iter()
        .map(|members| {
            let start = members.iter().map(|(_, s)| s.start).min().unwrap_or(0);
            let end = members.iter().map(|(_, s)| s.end).max().unwrap_or(0);
            let ids = AttributeValue::AnnotationIdSet(members.iter().map(|(id, _)| *id).collect());
            doc.add_annotation(
                SENTENCE,
                vec![Span::new(start, end)],
                vec![Attribute::new(CONSTITUENTS, ids)],
            )
            .expect("sentence span covers existing tokens")
        })
        .collect()
}
