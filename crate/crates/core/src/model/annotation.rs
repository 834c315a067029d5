use super::{AnnotationId, Attribute, AttributeSet, AttributeValue, Span};

/// A typed, id-bearing record over one or more spans of document text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    id: AnnotationId,
    annotation_type: String,
    spans: Vec<Span>,
    attributes: AttributeSet,
}

impl Annotation {
    /// Raw constructor. Nothing is checked here; `Document::add_annotation`
    /// and `Document::validate` enforce the invariants.
    pub fn new(
        id: AnnotationId,
        annotation_type: impl Into<String>,
        spans: Vec<Span>,
        attributes: AttributeSet,
    ) -> Self {
        Annotation {
            id,
            annotation_type: annotation_type.into(),
            spans,
            attributes,
        }
    }

    pub fn id(&self) -> AnnotationId {
        self.id
    }

    pub fn annotation_type(&self) -> &str {
        &self.annotation_type
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn attributes(&self) -> &AttributeSet {
        &self.attributes
    }

    pub fn attributes_mut(&mut self) -> &mut AttributeSet {
        &mut self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeValue> {
        self.attributes.get(name)
    }

    pub fn put_attribute(&mut self, attr: Attribute) -> Option<AttributeValue> {
        self.attributes.put(attr)
    }

    /// Canonical ordering key: first span start, first span end, id.
    pub fn order_key(&self) -> (usize, usize, AnnotationId) {
        match self.spans.first() {
            Some(s) => (s.start, s.end, self.id),
            None => (usize::MAX, usize::MAX, self.id),
        }
    }

    pub fn intersects(&self, start: usize, end: usize) -> bool {
        self.spans.iter().any(|s| s.intersects(start, end))
    }
}
