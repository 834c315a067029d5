//! String interning for annotation types, attribute names and string values.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("symbol {0} was never issued")]
pub struct UnknownSymbol(pub u32);

/// Bidirectional string ↔ symbol map. Ids are issued from 0 in insertion
/// order and stay valid for the table's lifetime. `intern` takes `&self`;
/// mutation is serialized by an internal lock.
#[derive(Debug, Default)]
pub struct InternTable {
    inner: RwLock<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    ids: HashMap<Arc<str>, Symbol>,
    strings: Vec<Arc<str>>,
}

impl InternTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&self, s: &str) -> Symbol {
        if let Some(&sym) = self.inner.read().ids.get(s) {
            return sym;
        }
        let mut inner = self.inner.write();
        if let Some(&sym) = inner.ids.get(s) {
            return sym;
        }
        let sym = Symbol(u32::try_from(inner.strings.len()).expect("intern table overflow"));
        let shared: Arc<str> = Arc::from(s);
        inner.strings.push(shared.clone());
        inner.ids.insert(shared, sym);
        sym
    }

    /// Looks up a string without interning it.
    pub fn get(&self, s: &str) -> Option<Symbol> {
        self.inner.read().ids.get(s).copied()
    }

    pub fn resolve(&self, sym: Symbol) -> Result<Arc<str>, UnknownSymbol> {
        self.inner
            .read()
            .strings
            .get(sym.index())
            .cloned()
            .ok_or(UnknownSymbol(sym.0))
    }

    pub fn len(&self) -> usize {
        self.inner.read().strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_strings_share_a_symbol() {
        let t = InternTable::new();
        let a = t.intern("token");
        assert_eq!(t.intern("token"), a);
        assert_eq!(a, Symbol(0));
        assert_ne!(t.intern("pos"), a);
        assert_eq!(&*t.resolve(t.intern("pos")).unwrap(), "pos");
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn resolve_unissued_symbol_fails() {
        let t = InternTable::new();
        assert_eq!(t.resolve(Symbol(3)), Err(UnknownSymbol(3)));
    }

    #[test]
    fn concurrent_interning_is_consistent() {
        let t = std::sync::Arc::new(InternTable::new());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let t = t.clone();
                std::thread::spawn(move || {
                    (0..200).map(|i| t.intern(&format!("s{i}"))).collect::<Vec<_>>()
                })
            })
            .collect();
        let results: Vec<Vec<Symbol>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(results.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(t.len(), 200);
    }
}
