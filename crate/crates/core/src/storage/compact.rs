//! Memory-compact, read-only document representation.
//!
//! Types, attribute names and string values are interned; spans are stored
//! as `u32` pairs. A start-sorted span index with running maximum end
//! answers range queries without a full scan.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::intern::{InternTable, Symbol};
use super::StorageError;
use crate::model::{
    Annotation, AnnotationId, Attribute, AttributeSet, AttributeValue, Document, ModelError, Span,
    Text,
};

#[derive(Clone, Debug, PartialEq, Eq)]
enum CompactValue {
    Str(Symbol),
    StrSet(Box<[Symbol]>),
    Id(u64),
    IdSet(Box<[u64]>),
}

#[derive(Debug)]
struct CompactAnnotation {
    id: u64,
    annotation_type: Symbol,
    spans: Box<[[u32; 2]]>,
    attributes: Box<[(Symbol, CompactValue)]>,
}

impl CompactAnnotation {
    fn order_key(&self) -> (u32, u32, u64) {
        let [s, e] = self.spans.first().copied().unwrap_or([u32::MAX, u32::MAX]);
        (s, e, self.id)
    }
}

#[derive(Debug)]
struct SpanEntry {
    start: u32,
    end: u32,
    slot: u32,
}

#[derive(Debug)]
pub struct CompactDocument {
    id: String,
    text: Text,
    next_id: u64,
    table: InternTable,
    attributes: Box<[(Symbol, CompactValue)]>,
    annotations: Box<[CompactAnnotation]>,
    span_index: Box<[SpanEntry]>,
    running_max_end: Box<[u32]>,
}

fn offset(v: usize) -> Result<u32, StorageError> {
    u32::try_from(v).map_err(|_| StorageError::TooLarge(v))
}

impl CompactDocument {
    pub fn from_document(doc: &Document) -> Result<Self, StorageError> {
        let table = InternTable::new();
        let attributes = compact_attributes(&table, doc.attributes());
        let mut annotations = Vec::with_capacity(doc.annotation_count());
        for a in doc.annotations() {
            let spans = a
                .spans()
                .iter()
                .map(|s| Ok([offset(s.start)?, offset(s.end)?]))
                .collect::<Result<Vec<_>, StorageError>>()?;
            annotations.push(CompactAnnotation {
                id: a.id().0,
                annotation_type: table.intern(a.annotation_type()),
                spans: spans.into_boxed_slice(),
                attributes: compact_attributes(&table, a.attributes()),
            });
        }
        let mut span_index: Vec<SpanEntry> = annotations
            .iter()
            .enumerate()
            .flat_map(|(slot, a)| {
                a.spans.iter().map(move |&[start, end]| SpanEntry {
                    start,
                    end,
                    slot: slot as u32,
                })
            })
            .collect();
        span_index.sort_unstable_by_key(|e| (e.start, e.end, e.slot));
        let running_max_end = span_index
            .iter()
            .scan(0u32, |m, e| {
                *m = (*m).max(e.end);
                Some(*m)
            })
            .collect();
        Ok(CompactDocument {
            id: doc.id().to_owned(),
            text: doc.text_index().clone(),
            next_id: doc.next_id().0,
            table,
            attributes,
            annotations: annotations.into_boxed_slice(),
            span_index: span_index.into_boxed_slice(),
            running_max_end,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn annotation_count(&self) -> usize {
        self.annotations.len()
    }

    /// Number of distinct interned strings.
    pub fn symbol_count(&self) -> usize {
        self.table.len()
    }

    fn slot(&self, id: AnnotationId) -> Option<usize> {
        self.annotations.binary_search_by_key(&id.0, |a| a.id).ok()
    }

    fn sorted_ids(&self, mut slots: Vec<usize>) -> Vec<AnnotationId> {
        slots.sort_unstable_by_key(|&i| self.annotations[i].order_key());
        slots.dedup();
        slots.into_iter().map(|i| AnnotationId(self.annotations[i].id)).collect()
    }

    pub fn select_by_type(&self, annotation_type: &str) -> Vec<AnnotationId> {
        let Some(sym) = self.table.get(annotation_type) else {
            return Vec::new();
        };
        let slots = (0..self.annotations.len())
            .filter(|&i| self.annotations[i].annotation_type == sym)
            .collect();
        self.sorted_ids(slots)
    }

    pub fn select_matching(
        &self,
        annotation_type: &str,
        name: &str,
        value: &AttributeValue,
    ) -> Vec<AnnotationId> {
        let (Some(ty), Some(name_sym)) = (self.table.get(annotation_type), self.table.get(name))
        else {
            return Vec::new();
        };
        let Some(wanted) = lookup_value(&self.table, value) else {
            return Vec::new();
        };
        let slots = (0..self.annotations.len())
            .filter(|&i| {
                let a = &self.annotations[i];
                a.annotation_type == ty
                    && a.attributes.iter().any(|(n, v)| *n == name_sym && *v == wanted)
            })
            .collect();
        self.sorted_ids(slots)
    }

    pub fn select_overlapping(
        &self,
        start: usize,
        end: usize,
    ) -> Result<Vec<AnnotationId>, ModelError> {
        if start > end {
            return Err(ModelError::InvalidRange { start, end });
        }
        // Offsets beyond u32 cannot occur in the index; clamp the query.
        let s = u32::try_from(start).unwrap_or(u32::MAX);
        let e = u32::try_from(end).unwrap_or(u32::MAX);
        let upper = if s == e {
            self.span_index.partition_point(|x| x.start <= s)
        } else {
            self.span_index.partition_point(|x| x.start < e)
        };
        let lower = self.running_max_end[..upper].partition_point(|&m| m < s);
        let slots = self.span_index[lower..upper]
            .iter()
            .filter(|x| Span::new(x.start as usize, x.end as usize).intersects(start, end))
            .map(|x| x.slot as usize)
            .collect();
        Ok(self.sorted_ids(slots))
    }

    /// Rebuilds the full annotation for `id`.
    pub fn annotation(&self, id: AnnotationId) -> Result<Annotation, ModelError> {
        let a = &self.annotations[self.slot(id).ok_or(ModelError::NotFound(id))?];
        Ok(Annotation::new(
            id,
            &*self.resolve(a.annotation_type),
            a.spans
                .iter()
                .map(|&[s, e]| Span::new(s as usize, e as usize))
                .collect(),
            self.expand_attributes(&a.attributes),
        ))
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::new(self.id.clone(), self.text.clone());
        *doc.attributes_mut() = self.expand_attributes(&self.attributes);
        for a in self.annotations.iter() {
            let full = self
                .annotation(AnnotationId(a.id))
                .expect("slot exists for stored annotation");
            doc.insert_with_id(full).expect("ids are unique");
        }
        doc.advance_next_id(AnnotationId(self.next_id))
            .expect("stored counter exceeds stored ids");
        doc
    }

    fn resolve(&self, sym: Symbol) -> Arc<str> {
        self.table.resolve(sym).expect("symbols come from this table")
    }

    fn expand_attributes(&self, attrs: &[(Symbol, CompactValue)]) -> AttributeSet {
        attrs
            .iter()
            .map(|(n, v)| {
                let value = match v {
                    CompactValue::Str(s) => AttributeValue::String(self.resolve(*s).to_string()),
                    CompactValue::StrSet(ss) => AttributeValue::StringSet(
                        ss.iter().map(|s| self.resolve(*s).to_string()).collect(),
                    ),
                    CompactValue::Id(id) => AttributeValue::AnnotationId(AnnotationId(*id)),
                    CompactValue::IdSet(ids) => AttributeValue::AnnotationIdSet(
                        ids.iter().map(|&i| AnnotationId(i)).collect::<BTreeSet<_>>(),
                    ),
                };
                Attribute::new(self.resolve(*n).to_string(), value)
            })
            .collect()
    }
}

fn compact_attributes(table: &InternTable, set: &AttributeSet) -> Box<[(Symbol, CompactValue)]> {
    set.iter()
        .map(|(name, value)| {
            let v = match value {
                AttributeValue::String(s) => CompactValue::Str(table.intern(s)),
                AttributeValue::StringSet(ss) => {
                    CompactValue::StrSet(ss.iter().map(|s| table.intern(s)).collect())
                }
                AttributeValue::AnnotationId(id) => CompactValue::Id(id.0),
                AttributeValue::AnnotationIdSet(ids) => {
                    CompactValue::IdSet(ids.iter().map(|i| i.0).collect())
                }
            };
            (table.intern(name), v)
        })
        .collect()
}

/// Translates a query value without growing the table; `None` means the
/// value cannot occur in this document.
fn lookup_value(table: &InternTable, value: &AttributeValue) -> Option<CompactValue> {
    Some(match value {
        AttributeValue::String(s) => CompactValue::Str(table.get(s)?),
        AttributeValue::StringSet(ss) => CompactValue::StrSet(
            ss.iter().map(|s| table.get(s)).collect::<Option<Box<[_]>>>()?,
        ),
        AttributeValue::AnnotationId(id) => CompactValue::Id(id.0),
        AttributeValue::AnnotationIdSet(ids) => {
            CompactValue::IdSet(ids.iter().map(|i| i.0).collect())
        }
    })
}
