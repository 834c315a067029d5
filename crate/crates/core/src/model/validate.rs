use std::fmt;

use serde::Serialize;

use super::AnnotationId;

/// Invariant that a document failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    EmptyType,
    EmptySpanSet,
    ReversedSpan,
    SpanOutOfBounds,
    UnsortedSpans,
    OverlappingSpans,
    EmptyAttributeName,
    IdNotBelowNextId,
    DanglingReference,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::EmptyType => "EmptyType",
            Rule::EmptySpanSet => "EmptySpanSet",
            Rule::ReversedSpan => "ReversedSpan",
            Rule::SpanOutOfBounds => "SpanOutOfBounds",
            Rule::UnsortedSpans => "UnsortedSpans",
            Rule::OverlappingSpans => "OverlappingSpans",
            Rule::EmptyAttributeName => "EmptyAttributeName",
            Rule::IdNotBelowNextId => "IdNotBelowNextId",
            Rule::DanglingReference => "DanglingReference",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One failed check. `annotation` is `None` for document-level attributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub annotation: Option<AnnotationId>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.annotation {
            Some(id) => write!(f, "annotation {id}: {} ({})", self.rule, self.detail),
            None => write!(f, "document: {} ({})", self.rule, self.detail),
        }
    }
}
