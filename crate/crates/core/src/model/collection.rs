use indexmap::IndexMap;

use super::{Attribute, AttributeSet, AttributeValue, Document, ModelError};

/// Named, ordered set of documents with collection-level attributes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Collection {
    name: String,
    documents: IndexMap<String, Document>,
    attributes: AttributeSet,
}

impl Collection {
    pub fn new(name: impl Into<String>) -> Self {
        Collection {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_document(&mut self, doc: Document) -> Result<(), ModelError> {
        if self.documents.contains_key(doc.id()) {
            return Err(ModelError::DuplicateDocument(doc.id().to_owned()));
        }
        self.documents.insert(doc.id().to_owned(), doc);
        Ok(())
    }

    /// Replaces the stored document with the same id, or appends it.
    pub fn upsert_document(&mut self, doc: Document) -> Option<Document> {
        self.documents.insert(doc.id().to_owned(), doc)
    }

    pub fn remove_document(&mut self, id: &str) -> Option<Document> {
        self.documents.shift_remove(id)
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn document_mut(&mut self, id: &str) -> Option<&mut Document> {
        self.documents.get_mut(id)
    }

    pub fn documents(&self) -> impl ExactSizeIterator<Item = &Document> {
        self.documents.values()
    }

    pub fn documents_mut(&mut self) -> impl ExactSizeIterator<Item = &mut Document> {
        self.documents.values_mut()
    }

    pub(crate) fn documents_map_mut(&mut self) -> &mut IndexMap<String, Document> {
        &mut self.documents
    }

    pub fn document_ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn attributes(&self) -> &AttributeSet {
        &self.attributes
    }

    pub fn attributes_mut(&mut self) -> &mut AttributeSet {
        &mut self.attributes
    }

    pub fn put_attribute(&mut self, attr: Attribute) -> Option<AttributeValue> {
        self.attributes.put(attr)
    }
}
