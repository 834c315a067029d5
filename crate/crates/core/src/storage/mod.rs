//! Persistence: interchange format, collection directories, encoding input
//! filters and the compact interned document representation.

mod collection_fs;
mod compact;
mod encoding;
mod intern;
mod interchange;
mod tables;

use std::path::Path;

use thiserror::Error;

pub use collection_fs::{
    check_document_id, document_path, load_collection, load_document, save_collection,
    save_document, write_atomic, CollectionManifest, DOCS_DIR, MANIFEST_FILE,
};
pub use compact::CompactDocument;
pub use encoding::{decode, DecodeError, EncodingId, UnknownEncoding};
pub use intern::{InternTable, Symbol, UnknownSymbol};
pub use interchange::{
    annotations_to_json, attributes_from_json, export_document, import_interchange,
    to_interchange_bytes, AnnotationDraft, FORMAT_VERSION,
};

use crate::model::{Attribute, Document, Violation};

/// Document attribute recording the encoding a document was imported from.
pub const SOURCE_ENCODING_ATTRIBUTE: &str = "source_encoding";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("parse error at {}: {message}", if path.is_empty() { "<root>" } else { path.as_str() })]
    Parse { path: String, message: String },
    #[error("unknown format version {0}")]
    UnknownVersion(u64),
    #[error("document fails validation: {}", join(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("document {id:?} fails validation: {}", join(violations))]
    DocumentInvalid {
        id: String,
        violations: Vec<Violation>,
    },
    #[error("document {0:?} listed in manifest but missing on disk")]
    MissingDocument(String),
    #[error("invalid document id {0:?}")]
    InvalidDocumentId(String),
    #[error("offset {0} does not fit the compact layout")]
    TooLarge(usize),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl StorageError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StorageError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Prefixes parse paths with the file they came from.
    pub(crate) fn in_file(self, file: &Path) -> Self {
        match self {
            StorageError::Parse { path, message } => StorageError::Parse {
                path: format!("{}: {path}", file.display()),
                message,
            },
            other => other,
        }
    }
}

/// Decodes raw bytes into a fresh, unannotated document.
pub fn import_document(
    bytes: &[u8],
    encoding: EncodingId,
    id: &str,
) -> Result<Document, StorageError> {
    let text = decode(bytes, encoding)?;
    let mut doc = Document::new(id, text);
    doc.put_attribute(Attribute::new(SOURCE_ENCODING_ATTRIBUTE, encoding.name()));
    Ok(doc)
}
