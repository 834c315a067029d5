use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Identifier of an annotation, unique within its document.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AnnotationId(pub u64);

impl fmt::Display for AnnotationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for AnnotationId {
    fn from(v: u64) -> Self {
        AnnotationId(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    String,
    StringSet,
    AnnotationId,
    AnnotationIdSet,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::String => "STRING",
            AttributeKind::StringSet => "STRING_SET",
            AttributeKind::AnnotationId => "ANNOTATION_ID",
            AttributeKind::AnnotationIdSet => "ANNOTATION_ID_SET",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "STRING" => AttributeKind::String,
            "STRING_SET" => AttributeKind::StringSet,
            "ANNOTATION_ID" => AttributeKind::AnnotationId,
            "ANNOTATION_ID_SET" => AttributeKind::AnnotationIdSet,
            _ => return None,
        })
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typed attribute payload. Sets are ordered so they carry no duplicates and
/// serialize sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttributeValue {
    String(String),
    StringSet(BTreeSet<String>),
    AnnotationId(AnnotationId),
    AnnotationIdSet(BTreeSet<AnnotationId>),
}

impl AttributeValue {
    pub fn kind(&self) -> AttributeKind {
        match self {
            AttributeValue::String(_) => AttributeKind::String,
            AttributeValue::StringSet(_) => AttributeKind::StringSet,
            AttributeValue::AnnotationId(_) => AttributeKind::AnnotationId,
            AttributeValue::AnnotationIdSet(_) => AttributeKind::AnnotationIdSet,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttributeValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn id_set<I: IntoIterator<Item = u64>>(ids: I) -> Self {
        AttributeValue::AnnotationIdSet(ids.into_iter().map(AnnotationId).collect())
    }

    pub fn string_set<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AttributeValue::StringSet(items.into_iter().map(Into::into).collect())
    }

    /// Annotation ids this value points at.
    pub fn references(&self) -> Vec<AnnotationId> {
        match self {
            AttributeValue::AnnotationId(id) => vec![*id],
            AttributeValue::AnnotationIdSet(ids) => ids.iter().copied().collect(),
            _ => Vec::new(),
        }
    }
}

impl From<&str> for AttributeValue {
    fn from(s: &str) -> Self {
        AttributeValue::String(s.to_owned())
    }
}

impl From<String> for AttributeValue {
    fn from(s: String) -> Self {
        AttributeValue::String(s)
    }
}

impl From<AnnotationId> for AttributeValue {
    fn from(id: AnnotationId) -> Self {
        AttributeValue::AnnotationId(id)
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::String(s) => f.write_str(s),
            AttributeValue::StringSet(set) => {
                let items: Vec<&str> = set.iter().map(String::as_str).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            AttributeValue::AnnotationId(id) => write!(f, "#{id}"),
            AttributeValue::AnnotationIdSet(ids) => {
                let items: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                write!(f, "[{}]", items.join(" "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub value: AttributeValue,
}

impl Attribute {
    pub fn new(name: impl Into<String>, value: impl Into<AttributeValue>) -> Self {
        Attribute {
            name: name.into(),
            value: value.into(),
        }
    }
}

/// Name-unique attribute collection that keeps insertion order. Replacing
/// an attribute keeps its original position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributeSet(IndexMap<String, AttributeValue>);

impl AttributeSet {
    pub fn new() -> Self {
        AttributeSet(IndexMap::new())
    }

    /// Builds a set, rejecting repeated or empty names.
    pub fn from_attributes<I>(attrs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = Attribute>,
    {
        let mut map = IndexMap::new();
        for attr in attrs {
            if attr.name.is_empty() {
                return Err(ModelError::EmptyAttributeName);
            }
            if map.contains_key(&attr.name) {
                return Err(ModelError::DuplicateAttributeName(attr.name));
            }
            map.insert(attr.name, attr.value);
        }
        Ok(AttributeSet(map))
    }

    /// Inserts or replaces, returning the previous value.
    pub fn put(&mut self, attr: Attribute) -> Option<AttributeValue> {
        self.0.insert(attr.name, attr.value)
    }

    pub fn get(&self, name: &str) -> Option<&AttributeValue> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<AttributeValue> {
        self.0.shift_remove(name)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &AttributeValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_attributes(&self) -> Vec<Attribute> {
        self.0
            .iter()
            .map(|(k, v)| Attribute::new(k.clone(), v.clone()))
            .collect()
    }

    pub(crate) fn insert_raw(&mut self, name: String, value: AttributeValue) -> bool {
        self.0.insert(name, value).is_none()
    }
}

impl FromIterator<Attribute> for AttributeSet {
    /// Later duplicates replace earlier ones.
    fn from_iter<T: IntoIterator<Item = Attribute>>(iter: T) -> Self {
        let mut set = AttributeSet::new();
        for a in iter {
            set.put(a);
        }
        set
    }
}
