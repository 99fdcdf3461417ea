//! Edit-distance spelling corrector over a word frequency lexicon.
//!
//! Every word that is not in the lexicon is replaced by its closest entry
//! (ties broken by higher frequency, then lexicographic order). Words
//! already in the lexicon are never touched.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::orthography::{normalize, tokenize_sentence};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("cannot build a lexicon from an empty corpus")]
    EmptyCorpus,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `word<TAB>count` with count >= 1")]
    Malformed { line: usize },
}

/// Lowercase NFC word counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencyLexicon {
    counts: BTreeMap<String, u64>,
    /// Entries bucketed by character length for distance pruning.
    by_len: BTreeMap<usize, Vec<(Vec<char>, String)>>,
}

fn is_word(text: &str) -> bool {
    text.chars().any(char::is_alphabetic)
}

impl FrequencyLexicon {
    fn from_counts(counts: BTreeMap<String, u64>) -> FrequencyLexicon {
        let mut by_len: BTreeMap<usize, Vec<(Vec<char>, String)>> = BTreeMap::new();
        for w in counts.keys() {
            let chars: Vec<char> = w.chars().collect();
            by_len.entry(chars.len()).or_default().push((chars, w.clone()));
        }
        FrequencyLexicon { counts, by_len }
    }

    /// Count the word tokens of clean sentences.
    pub fn build<S: AsRef<str>>(sentences: &[S]) -> Result<FrequencyLexicon, BaselineError> {
        let mut counts = BTreeMap::new();
        for s in sentences {
            for t in tokenize_sentence(&normalize(s.as_ref())).iter() {
                if is_word(&t.text) {
                    *counts.entry(t.text.to_lowercase()).or_insert(0) += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(BaselineError::EmptyCorpus);
        }
        Ok(Self::from_counts(counts))
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(&normalize(word).to_lowercase()).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.count(word) > 0
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// `word<TAB>count` lines in lexicographic order.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (w, c) in &self.counts {
            let _ = writeln!(s, "{w}\t{c}");
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<FrequencyLexicon, BaselineError> {
        let mut counts = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = || BaselineError::Malformed { line: i + 1 };
            let (w, c) = line.split_once('\t').ok_or_else(malformed)?;
            let c: u64 = c.trim().parse().map_err(|_| malformed())?;
            if c == 0 || w.is_empty() {
                return Err(malformed());
            }
            counts.insert(normalize(w).to_lowercase(), c);
        }
        Ok(Self::from_counts(counts))
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        fs::write(path, self.to_tsv()).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<FrequencyLexicon, BaselineError> {
        let text = fs::read_to_string(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    /// Entries within `max_dist` edits of `word`, best first.
    pub fn candidates(&self, word: &str, max_dist: usize) -> Vec<(String, usize)> {
        let w: Vec<char> = normalize(word).to_lowercase().chars().collect();
        let lo = w.len().saturating_sub(max_dist);
        let hi = w.len() + max_dist;
        let mut out: Vec<(String, usize, u64)> = Vec::new();
        for (_, bucket) in self.by_len.range(lo..=hi) {
            for (chars, entry) in bucket {
                let d = levenshtein(&w, chars);
                if d <= max_dist {
                    out.push((entry.clone(), d, self.counts[entry]));
                }
            }
        }
        out.sort_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)).then_with(|| a.0.cmp(&b.0)));
        out.into_iter().map(|(w, d, _)| (w, d)).collect()
    }

    /// Replace each out-of-lexicon word by its top candidate.
    pub fn correct(&self, sentence: &str, max_dist: usize) -> String {
        let tokens = tokenize_sentence(&normalize(sentence));
        let mut out = String::with_capacity(sentence.len());
        for t in tokens.iter() {
            out.push_str(&t.space_before);
            if is_word(&t.text) && !self.contains(&t.text) {
                if let Some((best, _)) = self.candidates(&t.text, max_dist).into_iter().next() {
                    out.push_str(&match_case(&t.text, &best));
                    continue;
                }
            }
            out.push_str(&t.text);
        }
        out.push_str(&tokens.trailing);
        out
    }
}

pub const DEFAULT_MAX_DIST: usize = 2;

/// Build-and-correct convenience matching the lexicon's defaults.
pub fn correct_baseline(sentence: &str, lexicon: &FrequencyLexicon) -> String {
    lexicon.correct(sentence, DEFAULT_MAX_DIST)
}

fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut chars = replacement.chars();
        return match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}

/// Levenshtein distance (insert, delete, substitute; unit costs).
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn levenshtein_str(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain recursive definition, memoised on suffix lengths.
    fn oracle(a: &[char], b: &[char], memo: &mut [Option<usize>], width: usize) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let key = a.len() * width + b.len();
        if let Some(d) = memo[key] {
            return d;
        }
        let d = (oracle(&a[1..], b, memo, width) + 1)
            .min(oracle(a, &b[1..], memo, width) + 1)
            .min(oracle(&a[1..], &b[1..], memo, width) + usize::from(a[0] != b[0]));
        memo[key] = Some(d);
        d
    }

    fn all_words(max_len: usize) -> Vec<Vec<char>> {
        let mut out = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for c in ['a', 'b', 'c'] {
                    let mut x: Vec<char> = w.clone();
                    x.push(c);
                    next.push(x);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    #[test]
    fn levenshtein_matches_recursive_oracle() {
        let words = all_words(6);
        let mut memo = vec![None; 7 * 7];
        for a in &words {
            for b in &words {
                memo.iter_mut().for_each(|m| *m = None);
                assert_eq!(levenshtein(a, b), oracle(a, b, &mut memo, 7), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn lexicon_counts() {
        let lex = FrequencyLexicon::build(&["a b a"]).unwrap();
        assert_eq!(lex.count("a"), 2);
        assert_eq!(lex.count("b"), 1);
        let lex = FrequencyLexicon::build(&["cha\u{300}o", "chào"]).unwrap();
        assert_eq!(lex.count("chào"), 2);
        assert!(FrequencyLexicon::build::<&str>(&[]).is_err());
    }

    #[test]
    fn candidate_ranking() {
        let lex = FrequencyLexicon::build(&["học học hóc hoa", "học"]).unwrap();
        let c = lex.candidates("hoc", 2);
        assert!(c.contains(&("học".to_string(), 1)));
        // Same distance: higher frequency first.
        assert_eq!(c[0].0, "học");
        assert_eq!(lex.candidates("học", 2)[0], ("học".to_string(), 0));
        assert!(lex.candidates("zzzzzzzz", 2).is_empty());
    }

    #[test]
    fn correction_and_idempotence() {
        let lex = FrequencyLexicon::build(&["Tôi đi học hôm nay.", "Xin chào các bạn."]).unwrap();
        assert_eq!(lex.correct("Tôi đi học hôm nay.", 2), "Tôi đi học hôm nay.");
        assert_eq!(lex.correct("Xin chàp các bạn.", 2), "Xin chào các bạn.");
        let once = lex.correct("Xim chafo cas bạn.", 2);
        assert_eq!(lex.correct(&once, 2), once);
    }

    #[test]
    fn tsv_roundtrip() {
        let lex = FrequencyLexicon::build(&["một hai hai ba ba ba"]).unwrap();
        let back = FrequencyLexicon::from_tsv(&lex.to_tsv()).unwrap();
        assert_eq!(back, lex);
        assert!(FrequencyLexicon::from_tsv("a\t0\n").is_err());
    }
}
