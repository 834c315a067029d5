use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use super::{ComponentDescriptor, ComponentKind, NativeComponent, RegistryError};

struct Entry {
    descriptor: Arc<ComponentDescriptor>,
    native: Option<Arc<dyn NativeComponent>>,
}

/// Components known to an engine, keyed by unique name.
///
/// Native components may be registered with or without an implementation;
/// a descriptor-only entry still takes part in validation and ordering.
#[derive(Default)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, descriptor: ComponentDescriptor) -> Result<(), RegistryError> {
        self.insert(descriptor, None)
    }

    pub fn register_native(
        &mut self,
        descriptor: ComponentDescriptor,
        implementation: Arc<dyn NativeComponent>,
    ) -> Result<(), RegistryError> {
        if descriptor.kind != ComponentKind::Native {
            return Err(RegistryError::InvalidDescriptor {
                name: descriptor.name,
                reason: "only native descriptors take an implementation".into(),
            });
        }
        self.insert(descriptor, Some(implementation))
    }

    fn insert(
        &mut self,
        descriptor: ComponentDescriptor,
        native: Option<Arc<dyn NativeComponent>>,
    ) -> Result<(), RegistryError> {
        descriptor.check()?;
        if self.entries.contains_key(&descriptor.name) {
            return Err(RegistryError::DuplicateName(descriptor.name));
        }
        self.entries.insert(
            descriptor.name.clone(),
            Entry {
                descriptor: Arc::new(descriptor),
                native,
            },
        );
        Ok(())
    }

    /// Registers every `*.json` descriptor in `dir`, in file-name order.
    pub fn load_dir(&mut self, dir: &Path) -> Result<Vec<String>, RegistryError> {
        let io = |e: std::io::Error| RegistryError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut names = Vec::new();
        for f in files {
            let d = ComponentDescriptor::read(&f)?;
            names.push(d.name.clone());
            self.register(d)?;
        }
        Ok(names)
    }

    pub fn get(&self, name: &str) -> Option<&ComponentDescriptor> {
        self.entries.get(name).map(|e| &*e.descriptor)
    }

    pub fn require(&self, name: &str) -> Result<&ComponentDescriptor, RegistryError> {
        self.get(name)
            .ok_or_else(|| RegistryError::UnknownComponent(name.to_owned()))
    }

    /// Shared handle to a descriptor, for callers that outlive the borrow.
    pub fn shared(&self, name: &str) -> Option<Arc<ComponentDescriptor>> {
        self.entries.get(name).map(|e| e.descriptor.clone())
    }

    pub fn implementation(&self, name: &str) -> Option<Arc<dyn NativeComponent>> {
        self.entries.get(name).and_then(|e| e.native.clone())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &ComponentDescriptor> {
        self.entries.values().map(|e| &*e.descriptor)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::Condition;

    #[test]
    fn register_and_list() {
        let mut r = Registry::new();
        r.register(
            ComponentDescriptor::native("tokenizer")
                .post(Condition::exists("token"))
                .post(Condition::with_attribute("token", "type")),
        )
        .unwrap();
        assert_eq!(r.names().collect::<Vec<_>>(), ["tokenizer"]);
        assert!(r.implementation("tokenizer").is_none());
    }

    #[test]
    fn duplicate_name() {
        let mut r = Registry::new();
        r.register(ComponentDescriptor::native("a")).unwrap();
        assert_eq!(
            r.register(ComponentDescriptor::native("a")),
            Err(RegistryError::DuplicateName("a".into()))
        );
    }

    #[test]
    fn invalid_wrapper() {
        let mut r = Registry::new();
        assert!(matches!(
            r.register(ComponentDescriptor::wrapper("w", "")),
            Err(RegistryError::InvalidDescriptor { .. })
        ));
        assert!(r.is_empty());
    }
}
