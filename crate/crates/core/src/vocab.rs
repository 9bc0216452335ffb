use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Marker for out-of-vocabulary entries; always index 0.
pub const UNK: &str = "<unk>";

/// An open string vocabulary with a reserved unknown entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::from(Vec::new())
    }
}

impl From<Vec<String>> for Vocab {
    fn from(items: Vec<String>) -> Self {
        let mut v = Vocab {
            items: Vec::new(),
            index: HashMap::new(),
        };
        v.insert(UNK);
        for item in items {
            v.insert(&item);
        }
        v
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.items
    }
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `item` if new and returns its index.
    pub fn insert(&mut self, item: &str) -> usize {
        if let Some(&i) = self.index.get(item) {
            return i;
        }
        self.items.push(item.to_string());
        self.index.insert(item.to_string(), self.items.len() - 1);
        self.items.len() - 1
    }

    /// Index of `item`, or of [`UNK`].
    pub fn get(&self, item: &str) -> usize {
        self.index.get(item).copied().unwrap_or(0)
    }

    pub fn contains(&self, item: &str) -> bool {
        self.index.contains_key(item)
    }

    pub fn item(&self, i: usize) -> &str {
        &self.items[i]
    }

    /// Entry count including [`UNK`].
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.len() <= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_maps_to_zero() {
        let mut v = Vocab::new();
        assert_eq!(v.insert("nsubj"), 1);
        assert_eq!(v.insert("nsubj"), 1);
        assert_eq!(v.get("dobj"), 0);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["<unk>","nsubj"]"#);
        assert_eq!(serde_json::from_str::<Vocab>(&json).unwrap(), v);
    }
}
