use std::collections::BTreeMap;

use thiserror::Error;

pub const BUNDLED_QWERTY: &str = include_str!("../../data/qwerty.tsv");

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("line {line}: expected `key<TAB>neighbors`")]
    Malformed { line: usize },
    #[error("adjacency is not symmetric: {a:?} lists {b:?} but not vice versa")]
    Asymmetric { a: char, b: char },
    #[error("key {0:?} has fewer than two neighbors")]
    TooFewNeighbors(char),
}

/// Physical key adjacency used for fat-finger substitutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyboardLayout {
    adjacency: BTreeMap<char, Vec<char>>,
}

impl KeyboardLayout {
    pub fn parse(text: &str) -> Result<KeyboardLayout, LayoutError> {
        let mut adjacency = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (key, neighbors) = raw.split_once('\t').ok_or(LayoutError::Malformed { line })?;
            let mut chars = key.chars();
            let (Some(key), None) = (chars.next(), chars.next()) else {
                return Err(LayoutError::Malformed { line });
            };
            let neighbors: Vec<char> = neighbors.trim().chars().collect();
            if !key.is_ascii_lowercase() || neighbors.iter().any(|c| !c.is_ascii_lowercase()) {
                return Err(LayoutError::Malformed { line });
            }
            adjacency.insert(key, neighbors);
        }
        let layout = KeyboardLayout { adjacency };
        layout.validate()?;
        Ok(layout)
    }

    pub fn qwerty() -> KeyboardLayout {
        Self::parse(BUNDLED_QWERTY).expect("bundled layout is valid")
    }

    fn validate(&self) -> Result<(), LayoutError> {
        for (&a, ns) in &self.adjacency {
            if ns.len() < 2 {
                return Err(LayoutError::TooFewNeighbors(a));
            }
            for &b in ns {
                if !self.neighbors(b).contains(&a) {
                    return Err(LayoutError::Asymmetric { a, b });
                }
            }
        }
        Ok(())
    }

    /// Neighbors of a lowercase key (empty for unknown keys).
    pub fn neighbors(&self, key: char) -> &[char] {
        self.adjacency.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn keys(&self) -> impl Iterator<Item = char> + '_ {
        self.adjacency.keys().copied()
    }
}
