use std::collections::HashMap;

use thiserror::Error;

use crate::orthography::normalize;

pub const BUNDLED_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.tsv");
pub const BUNDLED_TEENCODE: &str = include_str!("../../data/teencode.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconKind {
    Abbreviation,
    Teencode,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected `source<TAB>replacement`")]
    Malformed { line: usize },
    #[error("line {line}: duplicate source {source_phrase:?}")]
    Duplicate { line: usize, source_phrase: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// Phrase substitutions keyed by lowercase NFC source phrase.
#[derive(Debug, Clone)]
pub struct SubstitutionLexicon {
    kind: LexiconKind,
    entries: Vec<(String, String)>,
    /// first syllable -> (phrase syllables, replacement), longest phrase first
    by_first: HashMap<String, Vec<(Vec<String>, String)>>,
}

impl SubstitutionLexicon {
    pub fn parse(kind: LexiconKind, text: &str) -> Result<SubstitutionLexicon, LexiconError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (src, rep) = raw
                .split_once('\t')
                .ok_or(LexiconError::Malformed { line })?;
            let src = normalize(src.trim()).to_lowercase();
            let rep = normalize(rep.trim());
            if src.is_empty() || rep.is_empty() {
                return Err(LexiconError::Malformed { line });
            }
            if src == rep.to_lowercase() {
                return Err(LexiconError::Invalid {
                    line,
                    message: format!("replacement equals source {src:?}"),
                });
            }
            if entries.iter().any(|(s, _)| *s == src) {
                return Err(LexiconError::Duplicate {
                    line,
                    source_phrase: src,
                });
            }
            entries.push((src, rep));
        }
        Ok(Self::from_entries(kind, entries))
    }

    fn from_entries(kind: LexiconKind, entries: Vec<(String, String)>) -> SubstitutionLexicon {
        let mut by_first: HashMap<String, Vec<(Vec<String>, String)>> = HashMap::new();
        for (src, rep) in &entries {
            let words: Vec<String> = src.split_whitespace().map(str::to_string).collect();
            by_first
                .entry(words[0].clone())
                .or_default()
                .push((words, rep.clone()));
        }
        for list in by_first.values_mut() {
            list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        SubstitutionLexicon {
            kind,
            entries,
            by_first,
        }
    }

    pub fn bundled(kind: LexiconKind) -> SubstitutionLexicon {
        let text = match kind {
            LexiconKind::Abbreviation => BUNDLED_ABBREVIATIONS,
            LexiconKind::Teencode => BUNDLED_TEENCODE,
        };
        Self::parse(kind, text).expect("bundled lexicon is well formed")
    }

    pub fn kind(&self) -> LexiconKind {
        self.kind
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest phrase matching the lowercase words at the start of `words`.
    /// Returns the number of words consumed and the replacement.
    pub fn longest_match<'a>(&'a self, words: &[String]) -> Option<(usize, &'a str)> {
        let first = words.first()?;
        self.by_first.get(first)?.iter().find_map(|(phrase, rep)| {
            (phrase.len() <= words.len() && phrase[..] == words[..phrase.len()])
                .then_some((phrase.len(), rep.as_str()))
        })
    }

    pub fn lookup(&self, word: &str) -> Option<&str> {
        let w = word.to_lowercase();
        self.by_first
            .get(&w)?
            .iter()
            .find(|(p, _)| p.len() == 1)
            .map(|(_, r)| r.as_str())
    }
}
