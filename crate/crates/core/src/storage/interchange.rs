//! Versioned JSON interchange format for documents.
//!
//! The same bytes are used for collection files, HTTP payloads and the
//! wrapper stream protocol, so the writer is fully deterministic: fixed
//! field order, annotations by ascending id, sets sorted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::StorageError;
use crate::model::{
    Annotation, AnnotationId, Attribute, AttributeKind, AttributeSet, AttributeValue, Document,
    ModelError, Span,
};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize)]
struct DocumentOut<'a> {
    version: u64,
    id: &'a str,
    attributes: Vec<AttributeOut<'a>>,
    text: &'a str,
    next_id: u64,
    annotations: Vec<AnnotationOut<'a>>,
}

#[derive(Serialize)]
struct AnnotationOut<'a> {
    id: u64,
    #[serde(rename = "type")]
    annotation_type: &'a str,
    spans: Vec<[usize; 2]>,
    attributes: Vec<AttributeOut<'a>>,
}

#[derive(Serialize)]
pub(crate) struct AttributeOut<'a> {
    name: &'a str,
    kind: &'static str,
    value: ValueOut<'a>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ValueOut<'a> {
    Str(&'a str),
    Strs(Vec<&'a str>),
    Id(u64),
    Ids(Vec<u64>),
}

pub(crate) fn attributes_out(set: &AttributeSet) -> Vec<AttributeOut<'_>> {
    set.iter()
        .map(|(name, value)| AttributeOut {
            name,
            kind: value.kind().as_str(),
            value: match value {
                AttributeValue::String(s) => ValueOut::Str(s),
                AttributeValue::StringSet(ss) => ValueOut::Strs(ss.iter().map(String::as_str).collect()),
                AttributeValue::AnnotationId(id) => ValueOut::Id(id.0),
                AttributeValue::AnnotationIdSet(ids) => ValueOut::Ids(ids.iter().map(|i| i.0).collect()),
            },
        })
        .collect()
}

/// Serializes without validating. Used for snapshots of documents that may
/// be mid-edit; `export_document` is the checked entry point.
pub fn to_interchange_bytes(doc: &Document) -> Vec<u8> {
    let out = DocumentOut {
        version: FORMAT_VERSION,
        id: doc.id(),
        attributes: attributes_out(doc.attributes()),
        text: doc.text(),
        next_id: doc.next_id().0,
        annotations: doc
            .annotations()
            .map(annotation_out)
            .collect(),
    };
    serde_json::to_vec(&out).expect("interchange serialization is infallible")
}

/// Serializes a valid document to interchange bytes.
pub fn export_document(doc: &Document) -> Result<Vec<u8>, StorageError> {
    let violations = doc.validate();
    if !violations.is_empty() {
        return Err(StorageError::ValidationFailed(violations));
    }
    Ok(to_interchange_bytes(doc))
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    #[allow(dead_code)]
    version: u64,
    id: String,
    #[serde(default)]
    attributes: Vec<AttributeIn>,
    text: String,
    next_id: Option<u64>,
    #[serde(default)]
    annotations: Vec<AnnotationIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationIn {
    id: u64,
    #[serde(rename = "type")]
    annotation_type: String,
    spans: Vec<(usize, usize)>,
    #[serde(default)]
    attributes: Vec<AttributeIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct AttributeIn {
    name: String,
    kind: String,
    value: Value,
}

fn parse_err(path: impl Into<String>, message: impl Into<String>) -> StorageError {
    StorageError::Parse {
        path: path.into(),
        message: message.into(),
    }
}

pub(crate) fn parse_value(kind: &str, value: Value, path: &str) -> Result<AttributeValue, StorageError> {
    let kind = AttributeKind::parse(kind)
        .ok_or_else(|| parse_err(format!("{path}.kind"), format!("unknown attribute kind {kind:?}")))?;
    let vpath = format!("{path}.value");
    let want = |what: &str| parse_err(vpath.clone(), format!("expected {what} for {kind}"));
    Ok(match kind {
        AttributeKind::String => match value {
            Value::String(s) => AttributeValue::String(s),
            _ => return Err(want("a string")),
        },
        AttributeKind::AnnotationId => match value.as_u64() {
            Some(id) => AttributeValue::AnnotationId(AnnotationId(id)),
            None => return Err(want("a non-negative integer")),
        },
        AttributeKind::StringSet => {
            let Value::Array(items) = value else {
                return Err(want("an array of strings"));
            };
            let mut set = BTreeSet::new();
            for (i, item) in items.into_iter().enumerate() {
                let Value::String(s) = item else {
                    return Err(parse_err(format!("{vpath}[{i}]"), "expected a string"));
                };
                if !set.insert(s) {
                    return Err(parse_err(format!("{vpath}[{i}]"), "duplicate set member"));
                }
            }
            AttributeValue::StringSet(set)
        }
        AttributeKind::AnnotationIdSet => {
            let Value::Array(items) = value else {
                return Err(want("an array of integers"));
            };
            let mut set = BTreeSet::new();
            for (i, item) in items.into_iter().enumerate() {
                let id = item.as_u64().ok_or_else(|| {
                    parse_err(format!("{vpath}[{i}]"), "expected a non-negative integer")
                })?;
                if !set.insert(AnnotationId(id)) {
                    return Err(parse_err(format!("{vpath}[{i}]"), "duplicate set member"));
                }
            }
            AttributeValue::AnnotationIdSet(set)
        }
    })
}

pub(crate) fn attributes_in(attrs: Vec<AttributeIn>, path: &str) -> Result<AttributeSet, StorageError> {
    let mut set = AttributeSet::new();
    for (j, a) in attrs.into_iter().enumerate() {
        let apath = format!("{path}[{j}]");
        if a.name.is_empty() {
            return Err(parse_err(format!("{apath}.name"), "attribute name is empty"));
        }
        let value = parse_value(&a.kind, a.value, &apath)?;
        if !set.insert_raw(a.name, value) {
            return Err(parse_err(format!("{apath}.name"), "duplicate attribute name"));
        }
    }
    Ok(set)
}

pub(crate) fn from_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, StorageError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        parse_err(if path == "." { String::new() } else { path }, inner.to_string())
    })
}

pub(crate) fn check_version(bytes: &[u8]) -> Result<(), StorageError> {
    let probe: VersionProbe = from_json(bytes)?;
    if probe.version != FORMAT_VERSION {
        return Err(StorageError::UnknownVersion(probe.version));
    }
    Ok(())
}

/// Parses interchange bytes back into a document.
///
/// Structural problems (bad JSON, wrong types, duplicate ids or attribute
/// names) are parse errors; span and reference problems are left for
/// `Document::validate` to report.
pub fn import_interchange(bytes: &[u8]) -> Result<Document, StorageError> {
    check_version(bytes)?;
    let raw: DocumentIn = from_json(bytes)?;
    let mut doc = Document::new(raw.id, raw.text);
    *doc.attributes_mut() = attributes_in(raw.attributes, "attributes")?;
    for (k, a) in raw.annotations.into_iter().enumerate() {
        let path = format!("annotations[{k}]");
        let attrs = attributes_in(a.attributes, &format!("{path}.attributes"))?;
        let spans = a.spans.into_iter().map(Span::from).collect();
        doc.insert_with_id(Annotation::new(AnnotationId(a.id), a.annotation_type, spans, attrs))
            .map_err(|_| parse_err(format!("{path}.id"), format!("duplicate annotation id {}", a.id)))?;
    }
    if let Some(next) = raw.next_id {
        doc.advance_next_id(AnnotationId(next)).map_err(|_| {
            parse_err("next_id", format!("next_id {next} does not exceed every annotation id"))
        })?;
    }
    Ok(doc)
}

/// Annotations in their interchange shape, as a JSON array. This is the
/// query output format shared by the command line and the HTTP service.
pub fn annotations_to_json(annotations: &[&Annotation]) -> Vec<u8> {
    let out: Vec<_> = annotations.iter().map(|a| annotation_out(a)).collect();
    serde_json::to_vec(&out).expect("interchange serialization is infallible")
}

fn annotation_out(a: &Annotation) -> AnnotationOut<'_> {
    AnnotationOut {
        id: a.id().0,
        annotation_type: a.annotation_type(),
        spans: a.spans().iter().map(|s| [s.start, s.end]).collect(),
        attributes: attributes_out(a.attributes()),
    }
}

/// An annotation submitted for creation: the interchange shape minus the
/// id, which the document assigns.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationDraft {
    pub annotation_type: String,
    pub spans: Vec<Span>,
    pub attributes: Vec<Attribute>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DraftIn {
    #[serde(rename = "type")]
    annotation_type: String,
    spans: Vec<(usize, usize)>,
    #[serde(default)]
    attributes: Vec<AttributeIn>,
}

impl AnnotationDraft {
    pub fn from_json(bytes: &[u8]) -> Result<Self, StorageError> {
        let raw: DraftIn = from_json(bytes)?;
        Ok(AnnotationDraft {
            annotation_type: raw.annotation_type,
            spans: raw.spans.into_iter().map(Span::from).collect(),
            attributes: attributes_in(raw.attributes, "attributes")?.to_attributes(),
        })
    }

    pub fn add_to(self, doc: &mut Document) -> Result<AnnotationId, ModelError> {
        doc.add_annotation(&self.annotation_type, self.spans, self.attributes)
    }
}

/// Parses a JSON array of attributes in interchange shape.
pub fn attributes_from_json(bytes: &[u8]) -> Result<Vec<Attribute>, StorageError> {
    let raw: Vec<AttributeIn> = from_json(bytes)?;
    Ok(attributes_in(raw, "")?.to_attributes())
}
