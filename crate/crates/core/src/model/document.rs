use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{
    Annotation, AnnotationId, Attribute, AttributeSet, AttributeValue, ModelError, Rule, Span,
    SpanProblem, Text, Violation,
};

/// Text plus its standoff annotations and document-level attributes.
///
/// Annotation ids come from a monotonically increasing counter and are
/// never reused, even after removal.
#[derive(Clone, Debug, Default)]
pub struct Document {
    id: String,
    text: Text,
    annotations: BTreeMap<AnnotationId, Annotation>,
    attributes: AttributeSet,
    next_id: u64,
    by_type: HashMap<String, BTreeSet<AnnotationId>>,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        // by_type is derived from annotations
        self.id == other.id
            && self.text == other.text
            && self.next_id == other.next_id
            && self.attributes == other.attributes
            && self.annotations == other.annotations
    }
}

impl Eq for Document {}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<Text>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            ..Default::default()
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn text(&self) -> &str {
        self.text.as_str()
    }

    pub fn text_index(&self) -> &Text {
        &self.text
    }

    /// Text length in characters.
    pub fn len_chars(&self) -> usize {
        self.text.len()
    }

    pub fn next_id(&self) -> AnnotationId {
        AnnotationId(self.next_id)
    }

    pub fn annotation_count(&self) -> usize {
        self.annotations.len()
    }

    /// All annotations in ascending id order.
    pub fn annotations(&self) -> impl ExactSizeIterator<Item = &Annotation> {
        self.annotations.values()
    }

    pub fn contains(&self, id: AnnotationId) -> bool {
        self.annotations.contains_key(&id)
    }

    /// Annotation types currently present, sorted.
    pub fn annotation_types(&self) -> Vec<&str> {
        let mut types: Vec<&str> = self
            .by_type
            .iter()
            .filter(|(_, ids)| !ids.is_empty())
            .map(|(t, _)| t.as_str())
            .collect();
        types.sort_unstable();
        types
    }

    pub fn attributes(&self) -> &AttributeSet {
        &self.attributes
    }

    pub fn attributes_mut(&mut self) -> &mut AttributeSet {
        &mut self.attributes
    }

    /// Sets a document-level attribute, returning the previous value.
    pub fn put_attribute(&mut self, attr: Attribute) -> Option<AttributeValue> {
        self.attributes.put(attr)
    }

    /// Adds an annotation and returns its freshly assigned id.
    ///
    /// Spans are sorted by `(start, end)`; they must lie within the text and
    /// be pairwise disjoint.
    pub fn add_annotation(
        &mut self,
        annotation_type: &str,
        spans: Vec<Span>,
        attributes: Vec<Attribute>,
    ) -> Result<AnnotationId, ModelError> {
        if annotation_type.is_empty() {
            return Err(ModelError::EmptyType);
        }
        let spans = self.check_spans(spans)?;
        let attributes = AttributeSet::from_attributes(attributes)?;
        let id = AnnotationId(self.next_id);
        self.next_id += 1;
        self.index(Annotation::new(id, annotation_type, spans, attributes));
        Ok(id)
    }

    fn check_spans(&self, mut spans: Vec<Span>) -> Result<Vec<Span>, ModelError> {
        if spans.is_empty() {
            return Err(ModelError::InvalidSpan {
                span: None,
                problem: SpanProblem::Empty,
            });
        }
        let len = self.text.len();
        for s in &spans {
            if s.start > s.end {
                return Err(ModelError::InvalidSpan {
                    span: Some(*s),
                    problem: SpanProblem::Reversed,
                });
            }
            if s.end > len {
                return Err(ModelError::InvalidSpan {
                    span: Some(*s),
                    problem: SpanProblem::OutOfBounds { len },
                });
            }
        }
        spans.sort_unstable();
        for pair in spans.windows(2) {
            if pair[0].end > pair[1].start || pair[0] == pair[1] {
                return Err(ModelError::InvalidSpan {
                    span: Some(pair[1]),
                    problem: SpanProblem::Overlap,
                });
            }
        }
        Ok(spans)
    }

    /// Inserts an annotation under its own id without span checks; the
    /// counter advances past the id. Used when loading stored documents.
    pub fn insert_with_id(&mut self, annotation: Annotation) -> Result<(), ModelError> {
        let id = annotation.id();
        if self.annotations.contains_key(&id) {
            return Err(ModelError::DuplicateId(id));
        }
        self.next_id = self.next_id.max(id.0 + 1);
        self.index(annotation);
        Ok(())
    }

    /// Raises the id counter. Lowering it is refused so ids stay unique.
    pub fn advance_next_id(&mut self, next: AnnotationId) -> Result<(), ModelError> {
        if next.0 < self.next_id {
            return Err(ModelError::CounterRegression {
                requested: next,
                current: AnnotationId(self.next_id),
            });
        }
        self.next_id = next.0;
        Ok(())
    }

    fn index(&mut self, annotation: Annotation) {
        self.by_type
            .entry(annotation.annotation_type().to_owned())
            .or_default()
            .insert(annotation.id());
        self.annotations.insert(annotation.id(), annotation);
    }

    pub fn get_annotation(&self, id: AnnotationId) -> Result<&Annotation, ModelError> {
        self.annotations.get(&id).ok_or(ModelError::NotFound(id))
    }

    /// Removes an annotation. The id is not freed and references to it
    /// elsewhere are left dangling for `validate` to report.
    pub fn remove_annotation(&mut self, id: AnnotationId) -> Result<Annotation, ModelError> {
        let removed = self.annotations.remove(&id).ok_or(ModelError::NotFound(id))?;
        if let Some(ids) = self.by_type.get_mut(removed.annotation_type()) {
            ids.remove(&id);
            if ids.is_empty() {
                self.by_type.remove(removed.annotation_type());
            }
        }
        Ok(removed)
    }

    pub fn annotation_attributes_mut(
        &mut self,
        id: AnnotationId,
    ) -> Result<&mut AttributeSet, ModelError> {
        self.annotations
            .get_mut(&id)
            .map(Annotation::attributes_mut)
            .ok_or(ModelError::NotFound(id))
    }

    /// Sets an attribute on a stored annotation, returning the previous value.
    pub fn put_annotation_attribute(
        &mut self,
        id: AnnotationId,
        attr: Attribute,
    ) -> Result<Option<AttributeValue>, ModelError> {
        if attr.name.is_empty() {
            return Err(ModelError::EmptyAttributeName);
        }
        Ok(self.annotation_attributes_mut(id)?.put(attr))
    }

    /// Annotations of one type in canonical order.
    pub fn select_by_type(&self, annotation_type: &str) -> Vec<&Annotation> {
        let mut out: Vec<&Annotation> = match self.by_type.get(annotation_type) {
            Some(ids) => ids.iter().map(|id| &self.annotations[id]).collect(),
            None => Vec::new(),
        };
        sort_canonical(&mut out);
        out
    }

    /// Annotations of `annotation_type` whose attribute `name` equals `value`.
    pub fn select_matching(
        &self,
        annotation_type: &str,
        name: &str,
        value: &AttributeValue,
    ) -> Vec<&Annotation> {
        let mut out = self.select_by_type(annotation_type);
        out.retain(|a| a.attribute(name) == Some(value));
        out
    }

    /// Annotations with at least one span intersecting `[start, end)`.
    pub fn select_overlapping(
        &self,
        start: usize,
        end: usize,
    ) -> Result<Vec<&Annotation>, ModelError> {
        if start > end {
            return Err(ModelError::InvalidRange { start, end });
        }
        let mut out: Vec<&Annotation> = self
            .annotations
            .values()
            .filter(|a| a.intersects(start, end))
            .collect();
        sort_canonical(&mut out);
        Ok(out)
    }

    /// One text slice per span, in span order.
    pub fn annotated_text(&self, id: AnnotationId) -> Result<Vec<&str>, ModelError> {
        let ann = self.get_annotation(id)?;
        ann.spans()
            .iter()
            .map(|s| {
                self.text.slice(s.start, s.end).ok_or(ModelError::InvalidSpan {
                    span: Some(*s),
                    problem: SpanProblem::OutOfBounds {
                        len: self.text.len(),
                    },
                })
            })
            .collect()
    }

    /// Text covered by a single span.
    pub fn span_text(&self, span: Span) -> Option<&str> {
        self.text.slice(span.start, span.end)
    }

    /// Checks every invariant; an empty result means the document is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let len = self.text.len();
        for ann in self.annotations.values() {
            let id = Some(ann.id());
            let mut push = |rule: Rule, detail: String| {
                out.push(Violation {
                    annotation: id,
                    rule,
                    detail,
                })
            };
            if ann.annotation_type().is_empty() {
                push(Rule::EmptyType, "annotation type is empty".into());
            }
            if ann.id().0 >= self.next_id {
                push(
                    Rule::IdNotBelowNextId,
                    format!("id {} >= next_id {}", ann.id(), self.next_id),
                );
            }
            let spans = ann.spans();
            if spans.is_empty() {
                push(Rule::EmptySpanSet, "annotation has no spans".into());
            }
            for s in spans {
                if s.start > s.end {
                    push(Rule::ReversedSpan, format!("span {s} has start > end"));
                }
                if s.end > len || s.start > len {
                    push(
                        Rule::SpanOutOfBounds,
                        format!("span {s} exceeds text length {len}"),
                    );
                }
            }
            for pair in spans.windows(2) {
                if pair[0] > pair[1] {
                    push(
                        Rule::UnsortedSpans,
                        format!("span {} precedes {}", pair[0], pair[1]),
                    );
                } else if pair[0].end > pair[1].start || pair[0] == pair[1] {
                    push(
                        Rule::OverlappingSpans,
                        format!("spans {} and {} overlap", pair[0], pair[1]),
                    );
                }
            }
            for (name, value) in ann.attributes().iter() {
                if name.is_empty() {
                    push(Rule::EmptyAttributeName, "attribute name is empty".into());
                }
                for target in value.references() {
                    if !self.annotations.contains_key(&target) {
                        push(
                            Rule::DanglingReference,
                            format!("attribute {name} references missing annotation {target}"),
                        );
                    }
                }
            }
        }
        for (name, value) in self.attributes.iter() {
            if name.is_empty() {
                out.push(Violation {
                    annotation: None,
                    rule: Rule::EmptyAttributeName,
                    detail: "document attribute name is empty".into(),
                });
            }
            for target in value.references() {
                if !self.annotations.contains_key(&target) {
                    out.push(Violation {
                        annotation: None,
                        rule: Rule::DanglingReference,
                        detail: format!(
                            "document attribute {name} references missing annotation {target}"
                        ),
                    });
                }
            }
        }
        out
    }
}

pub(crate) fn sort_canonical(list: &mut [&Annotation]) {
    list.sort_unstable_by_key(|a| a.order_key());
}
