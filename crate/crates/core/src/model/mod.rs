//! In-memory standoff annotation model: collections, documents, annotations,
//! spans and typed attributes, plus the query API.

mod annotation;
mod attribute;
mod collection;
pub(crate) mod document;
mod query;
mod span;
mod text;
mod validate;

use thiserror::Error;

pub use annotation::Annotation;
pub use attribute::{AnnotationId, Attribute, AttributeKind, AttributeSet, AttributeValue};
pub use collection::Collection;
pub use document::Document;
pub use query::Query;
pub use span::Span;
pub use text::Text;
pub use validate::{Rule, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanProblem {
    Empty,
    Reversed,
    OutOfBounds { len: usize },
    Overlap,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid span{}: {}", span.map(|s| format!(" {s}")).unwrap_or_default(), describe(problem))]
    InvalidSpan {
        span: Option<Span>,
        problem: SpanProblem,
    },
    #[error("duplicate attribute name {0:?}")]
    DuplicateAttributeName(String),
    #[error("attribute name is empty")]
    EmptyAttributeName,
    #[error("annotation type is empty")]
    EmptyType,
    #[error("annotation {0} not found")]
    NotFound(AnnotationId),
    #[error("annotation id {0} already in use")]
    DuplicateId(AnnotationId),
    #[error("id counter cannot move from {current} back to {requested}")]
    CounterRegression {
        requested: AnnotationId,
        current: AnnotationId,
    },
    #[error("invalid range [{start},{end})")]
    InvalidRange { start: usize, end: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("document {0:?} already exists in collection")]
    DuplicateDocument(String),
}

fn describe(p: &SpanProblem) -> String {
    match p {
        SpanProblem::Empty => "span set is empty".into(),
        SpanProblem::Reversed => "start > end".into(),
        SpanProblem::OutOfBounds { len } => format!("exceeds text length {len}"),
        SpanProblem::Overlap => "overlaps another span of the same annotation".into(),
    }
}
