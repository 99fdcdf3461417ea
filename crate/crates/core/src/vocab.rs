//! Character vocabulary shared by the embedder and the corrector.

use std::collections::HashMap;

use thiserror::Error;

use crate::orthography::normalize;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const MASK: usize = 4;
pub const SPECIALS: [&str; 5] = ["<pad>", "<bos>", "<eos>", "<unk>", "<mask>"];

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("malformed vocabulary: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<char, usize>,
}

impl Vocab {
    /// Specials first, then characters by descending frequency, ties by
    /// code point.
    pub fn build<S: AsRef<str>>(texts: &[S]) -> Result<Vocab, VocabError> {
        let mut counts: HashMap<char, u64> = HashMap::new();
        for t in texts {
            for c in normalize(t.as_ref()).chars() {
                *counts.entry(c).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(VocabError::EmptyCorpus);
        }
        let mut chars: Vec<(char, u64)> = counts.into_iter().collect();
        chars.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let symbols = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(chars.into_iter().map(|(c, _)| c.to_string()))
            .collect();
        Self::from_symbols(symbols)
    }

    pub fn from_symbols(symbols: Vec<String>) -> Result<Vocab, VocabError> {
        if symbols.len() < SPECIALS.len() || symbols[..SPECIALS.len()] != SPECIALS {
            return Err(VocabError::Malformed("special symbols missing".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate().skip(SPECIALS.len()) {
            let mut chars = s.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(VocabError::Malformed(format!("symbol {s:?} is not one character")));
            };
            if index.insert(c, i).is_some() {
                return Err(VocabError::Malformed(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Vocab { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK)
    }

    /// Character ids of the NFC text (no specials added).
    pub fn encode(&self, text: &str) -> Vec<usize> {
        normalize(text).chars().map(|c| self.id(c)).collect()
    }

    /// Text of the ids, stopping at EOS and skipping other specials.
    pub fn decode(&self, ids: &[usize]) -> String {
        let mut s = String::with_capacity(ids.len());
        for &i in ids {
            if i == EOS {
                break;
            }
            if i >= SPECIALS.len() && i < self.symbols.len() {
                s.push_str(&self.symbols[i]);
            }
        }
        normalize(&s)
    }
}
