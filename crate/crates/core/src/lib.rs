//! Standoff annotation store and text-engineering pipeline.

pub mod model;
pub mod storage;
pub mod component;
pub mod builtin;
pub mod wrapper;
pub mod engine;

pub use model::{
    Annotation, AnnotationId, Attribute, AttributeKind, AttributeSet, AttributeValue, Collection,
    Document, ModelError, Query, Rule, Span, Violation,
};
