//! On-disk collection layout: `<dir>/manifest.json` plus one interchange
//! file per document under `<dir>/docs/`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::interchange::{self, attributes_in, attributes_out, AttributeIn, AttributeOut};
use super::StorageError;
use crate::model::{AttributeSet, Collection, Document};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DOCS_DIR: &str = "docs";

#[derive(Serialize)]
struct ManifestOut<'a> {
    version: u64,
    name: &'a str,
    documents: Vec<&'a str>,
    attributes: Vec<AttributeOut<'a>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestIn {
    #[allow(dead_code)]
    version: u64,
    name: String,
    documents: Vec<String>,
    #[serde(default)]
    attributes: Vec<AttributeIn>,
}

/// Parsed `manifest.json`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectionManifest {
    pub version: u64,
    pub name: String,
    pub documents: Vec<String>,
    pub attributes: AttributeSet,
}

impl CollectionManifest {
    pub fn for_collection(col: &Collection) -> Self {
        CollectionManifest {
            version: interchange::FORMAT_VERSION,
            name: col.name().to_owned(),
            documents: col.document_ids().map(str::to_owned).collect(),
            attributes: col.attributes().clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let out = ManifestOut {
            version: self.version,
            name: &self.name,
            documents: self.documents.iter().map(String::as_str).collect(),
            attributes: attributes_out(&self.attributes),
        };
        let mut bytes = serde_json::to_vec_pretty(&out).expect("manifest serialization");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StorageError> {
        interchange::check_version(bytes)?;
        let raw: ManifestIn = interchange::from_json(bytes)?;
        Ok(CollectionManifest {
            version: interchange::FORMAT_VERSION,
            name: raw.name,
            documents: raw.documents,
            attributes: attributes_in(raw.attributes, "attributes")?,
        })
    }

    pub fn read(dir: &Path) -> Result<Self, StorageError> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = fs::read(&path).map_err(|e| StorageError::io(&path, e))?;
        Self::from_bytes(&bytes).map_err(|e| e.in_file(&path))
    }

    /// Atomically replaces `<dir>/manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<(), StorageError> {
        write_atomic(&dir.join(MANIFEST_FILE), &self.to_bytes())
    }
}

/// Document ids double as file names, so they are restricted to a safe
/// character set.
pub fn check_document_id(id: &str) -> Result<(), StorageError> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StorageError::InvalidDocumentId(id.to_owned()))
    }
}

pub fn document_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(DOCS_DIR).join(format!("{id}.json"))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let parent = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(parent)
        .map_err(|e| StorageError::io(parent, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| StorageError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| StorageError::io(path, e.error))?;
    Ok(())
}

/// Validates, exports and atomically writes one document file.
pub fn save_document(dir: &Path, doc: &Document) -> Result<(), StorageError> {
    check_document_id(doc.id())?;
    let bytes = interchange::export_document(doc)?;
    let docs = dir.join(DOCS_DIR);
    fs::create_dir_all(&docs).map_err(|e| StorageError::io(&docs, e))?;
    write_atomic(&document_path(dir, doc.id()), &bytes)
}

pub fn load_document(dir: &Path, id: &str) -> Result<Document, StorageError> {
    check_document_id(id)?;
    let path = document_path(dir, id);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StorageError::MissingDocument(id.to_owned()))
        }
        Err(e) => return Err(StorageError::io(&path, e)),
    };
    let doc = interchange::import_interchange(&bytes).map_err(|e| e.in_file(&path))?;
    if doc.id() != id {
        return Err(StorageError::Parse {
            path: format!("{}: id", path.display()),
            message: format!("file holds document {:?}, manifest expects {id:?}", doc.id()),
        });
    }
    Ok(doc)
}

/// Writes the collection under `dir`.
///
/// Every document is validated and exported before anything touches the
/// disk. Document files go first, the manifest last, each through a
/// temp-file rename; files of documents no longer in the collection are
/// removed afterwards.
pub fn save_collection(col: &Collection, dir: &Path) -> Result<(), StorageError> {
    let mut payloads = Vec::with_capacity(col.len());
    for doc in col.documents() {
        check_document_id(doc.id())?;
        let bytes = interchange::export_document(doc).map_err(|e| match e {
            StorageError::ValidationFailed(v) => StorageError::DocumentInvalid {
                id: doc.id().to_owned(),
                violations: v,
            },
            other => other,
        })?;
        payloads.push((doc.id(), bytes));
    }
    let docs = dir.join(DOCS_DIR);
    fs::create_dir_all(&docs).map_err(|e| StorageError::io(&docs, e))?;
    for (id, bytes) in &payloads {
        write_atomic(&document_path(dir, id), bytes)?;
    }
    CollectionManifest::for_collection(col).write(dir)?;
    remove_stale_documents(col, &docs)
}

fn remove_stale_documents(col: &Collection, docs: &Path) -> Result<(), StorageError> {
    let entries = fs::read_dir(docs).map_err(|e| StorageError::io(docs, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| StorageError::io(docs, e))?;
        let name = entry.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
            continue;
        };
        if col.document(stem).is_none() {
            let path = entry.path();
            fs::remove_file(&path).map_err(|e| StorageError::io(&path, e))?;
        }
    }
    Ok(())
}

pub fn load_collection(dir: &Path) -> Result<Collection, StorageError> {
    let manifest = CollectionManifest::read(dir)?;
    let mut col = Collection::new(manifest.name);
    *col.attributes_mut() = manifest.attributes;
    for id in &manifest.documents {
        let doc = load_document(dir, id)?;
        col.add_document(doc).map_err(|_| StorageError::Parse {
            path: format!("{}: documents", dir.join(MANIFEST_FILE).display()),
            message: format!("document {id:?} listed twice"),
        })?;
    }
    Ok(col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Attribute, Span};

    fn two_docs() -> Collection {
        let mut col = Collection::new("demo");
        col.put_attribute(Attribute::new("owner", "tests"));
        let mut a = Document::new("a", "alpha beta");
        a.add_annotation("token", vec![Span::new(0, 5)], vec![]).unwrap();
        col.add_document(a).unwrap();
        col.add_document(Document::new("b", "γάμμα")).unwrap();
        col
    }

    fn listing(dir: &Path) -> Vec<String> {
        let mut names: Vec<String> = walk(dir)
            .into_iter()
            .map(|p| p.strip_prefix(dir).unwrap().display().to_string())
            .collect();
        names.sort();
        names
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn save_writes_manifest_and_documents() {
        let tmp = tempfile::tempdir().unwrap();
        save_collection(&two_docs(), tmp.path()).unwrap();
        assert_eq!(
            listing(tmp.path()),
            ["docs/a.json", "docs/b.json", "manifest.json"]
        );
        assert_eq!(load_collection(tmp.path()).unwrap(), two_docs());
    }

    #[test]
    fn second_save_wins() {
        let tmp = tempfile::tempdir().unwrap();
        let mut col = two_docs();
        save_collection(&col, tmp.path()).unwrap();
        col.remove_document("b");
        col.document_mut("a")
            .unwrap()
            .add_annotation("token", vec![Span::new(6, 10)], vec![])
            .unwrap();
        save_collection(&col, tmp.path()).unwrap();
        assert_eq!(listing(tmp.path()), ["docs/a.json", "manifest.json"]);
        assert_eq!(load_collection(tmp.path()).unwrap(), col);
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        save_collection(&two_docs(), tmp.path()).unwrap();
        let first: Vec<Vec<u8>> = walk(tmp.path()).iter().map(|p| fs::read(p).unwrap()).collect();
        let loaded = load_collection(tmp.path()).unwrap();
        save_collection(&loaded, tmp.path()).unwrap();
        let second: Vec<Vec<u8>> = walk(tmp.path()).iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn missing_document_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        save_collection(&two_docs(), tmp.path()).unwrap();
        fs::remove_file(document_path(tmp.path(), "b")).unwrap();
        assert!(matches!(
            load_collection(tmp.path()),
            Err(StorageError::MissingDocument(id)) if id == "b"
        ));
    }

    #[test]
    fn path_below_a_file_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        let blocker = tmp.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = save_collection(&two_docs(), &blocker.join("col")).unwrap_err();
        assert!(matches!(err, StorageError::Io { .. }), "{err:?}");
        assert!(!blocker.join("col").join(MANIFEST_FILE).exists());
    }

    #[cfg(unix)]
    #[test]
    fn unwritable_directory_leaves_no_manifest() {
        use std::os::unix::fs::PermissionsExt;
        let tmp = tempfile::tempdir().unwrap();
        let target = tmp.path().join("ro");
        fs::create_dir(&target).unwrap();
        fs::set_permissions(&target, fs::Permissions::from_mode(0o555)).unwrap();
        if fs::write(target.join("probe"), b"x").is_ok() {
            // running as a user that ignores permissions
            return;
        }
        let err = save_collection(&two_docs(), &target).unwrap_err();
        assert!(matches!(err, StorageError::Io { .. }), "{err:?}");
        assert!(!target.join(MANIFEST_FILE).exists());
    }

    #[test]
    fn unsafe_ids_rejected() {
        for id in ["", "..", "a/b", "x y"] {
            assert!(check_document_id(id).is_err(), "{id:?}");
        }
        check_document_id("doc-1.v2").unwrap();
    }
}
