use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use annotium::component::System;
use annotium::engine::Engine;
use annotium::storage::{
    check_document_id, load_collection, save_document, CollectionManifest, StorageError,
    MANIFEST_FILE,
};
use annotium::{Collection, Document};

use crate::error::{ApiError, ApiResult};

/// One collection: its directory, the last committed state and the set of
/// documents currently being mutated.
pub struct Slot {
    pub dir: PathBuf,
    pub collection: RwLock<Collection>,
    busy: Mutex<HashSet<String>>,
}

/// Exclusive right to mutate one document; released on drop.
pub struct Claim {
    slot: Arc<Slot>,
    id: String,
}

impl Drop for Claim {
    fn drop(&mut self) {
        self.slot.busy.lock().remove(&self.id);
    }
}

impl Slot {
    fn new(dir: PathBuf, collection: Collection) -> Self {
        Slot {
            dir,
            collection: RwLock::new(collection),
            busy: Mutex::new(HashSet::new()),
        }
    }

    pub fn claim(self: &Arc<Self>, id: &str) -> ApiResult<Claim> {
        if !self.busy.lock().insert(id.to_owned()) {
            return Err(ApiError::conflict(format!(
                "document {id} is being modified by another request"
            )));
        }
        Ok(Claim {
            slot: self.clone(),
            id: id.to_owned(),
        })
    }

    /// A copy of the committed document.
    pub fn snapshot(&self, id: &str) -> ApiResult<Document> {
        self.collection
            .read()
            .document(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("document {id}")))
    }

    /// Writes `doc` to disk, then makes it the committed state. The caller
    /// must hold the document's claim.
    pub fn commit(&self, _claim: &Claim, doc: Document) -> ApiResult<()> {
        save_document(&self.dir, &doc)?;
        let mut col = self.collection.write();
        let is_new = col.document(doc.id()).is_none();
        col.upsert_document(doc);
        if is_new {
            CollectionManifest::for_collection(&col).write(&self.dir)?;
        }
        Ok(())
    }

    pub fn remove(&self, _claim: &Claim, id: &str) -> ApiResult<()> {
        let mut col = self.collection.write();
        if col.remove_document(id).is_none() {
            return Err(ApiError::not_found(format!("document {id}")));
        }
        CollectionManifest::for_collection(&col).write(&self.dir)?;
        let path = annotium::storage::document_path(&self.dir, id);
        if let Err(e) = std::fs::remove_file(&path) {
            tracing::warn!("cannot remove {}: {e}", path.display());
        }
        Ok(())
    }
}

pub struct AppState {
    pub root: PathBuf,
    pub engine: Engine,
    pub systems: Vec<System>,
    collections: RwLock<BTreeMap<String, Arc<Slot>>>,
}

impl AppState {
    /// Loads every collection directory under `root`.
    pub fn load(root: &Path, engine: Engine, systems: Vec<System>) -> Result<Self, StorageError> {
        let mut collections = BTreeMap::new();
        let entries = std::fs::read_dir(root).map_err(|source| StorageError::Io {
            path: root.display().to_string(),
            source,
        })?;
        let mut dirs: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.join(MANIFEST_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let name = dir.file_name().unwrap().to_string_lossy().into_owned();
            let col = load_collection(&dir)?;
            collections.insert(name, Arc::new(Slot::new(dir, col)));
        }
        Ok(AppState {
            root: root.to_path_buf(),
            engine,
            systems,
            collections: RwLock::new(collections),
        })
    }

    pub fn slot(&self, name: &str) -> ApiResult<Arc<Slot>> {
        self.collections
            .read()
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("collection {name}")))
    }

    pub fn collection_names(&self) -> Vec<(String, usize)> {
        self.collections
            .read()
            .iter()
            .map(|(n, s)| (n.clone(), s.collection.read().len()))
            .collect()
    }

    pub fn create_collection(&self, name: &str) -> ApiResult<()> {
        check_document_id(name).map_err(|_| ApiError::bad_request(format!("invalid collection name {name:?}")))?;
        let mut all = self.collections.write();
        let dir = self.root.join(name);
        if all.contains_key(name) || dir.exists() {
            return Err(ApiError::conflict(format!("collection {name} already exists")));
        }
        let col = Collection::new(name);
        annotium::storage::save_collection(&col, &dir)?;
        all.insert(name.to_owned(), Arc::new(Slot::new(dir, col)));
        Ok(())
    }
}
