//! Name-keyed strategy registry.
//!
//! Interchangeable rule variants (the ambiguity scaling law, oracle target
//! selectors) are registered here under a stable name and looked up at
//! runtime from configuration or command-line flags.

use crate::error::{Error, Result};

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Box<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers a strategy. A later registration under an existing name
    /// replaces the earlier one.
    pub fn register(&mut self, name: &'static str, strategy: Box<T>) {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = strategy;
        } else {
            self.entries.push((name, strategy));
        }
    }

    pub fn with(mut self, name: &'static str, strategy: Box<T>) -> Self {
        self.register(name, strategy);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                registry: self.kind,
                name: name.to_string(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }
}
