//! Name-keyed factories for interchangeable strategies (priors,
//! regularizers, theory families), selected at runtime from configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Factory<P, T> = Box<dyn Fn(&P) -> Result<Arc<T>> + Send + Sync>;

pub struct Registry<P, T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Factory<P, T>>,
}

impl<P, T: ?Sized> Registry<P, T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(&P) -> Result<Arc<T>> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_owned(), Box::new(factory));
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &P) -> Result<Arc<T>> {
        let factory = self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: self.kind,
            name: name.to_owned(),
        })?;
        factory(params)
    }
}

impl<P, T: ?Sized> std::fmt::Debug for Registry<P, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Shape: Send + Sync {
        fn area(&self) -> f64;
    }
    struct Square(f64);
    impl Shape for Square {
        fn area(&self) -> f64 {
            self.0 * self.0
        }
    }

    #[test]
    fn build_by_name() {
        let mut reg: Registry<f64, dyn Shape> = Registry::new("shape");
        reg.register("square", |side: &f64| Ok(Arc::new(Square(*side)) as Arc<dyn Shape>));
        assert_eq!(reg.build("square", &3.0).unwrap().area(), 9.0);
        assert!(reg.contains("square"));
        let err = reg.build("circle", &1.0).err().unwrap();
        assert_eq!(err.to_string(), "unknown shape `circle`");
    }
}
