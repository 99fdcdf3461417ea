//! Corpus-level BLEU with brevity penalty and per-error-type breakdown.
//!
//! Clipped n-gram matches and n-gram totals are summed over the whole
//! corpus before dividing. The brevity penalty follows the usual
//! convention: candidates shorter than their references are penalised,
//! longer ones are not.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::errorgen::{CorruptionRecord, ErrorType};
use crate::orthography::normalize;

#[derive(Debug, Error, PartialEq)]
pub enum BleuError {
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("{records} corruption records for {pairs} pairs")]
    RecordMismatch { records: usize, pairs: usize },
    #[error("invalid BLEU config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    pub weights: Vec<f64>,
    /// Add one to every n-gram match and total count.
    pub smoothing: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig::uniform(4)
    }
}

impl BleuConfig {
    pub fn uniform(max_n: usize) -> BleuConfig {
        BleuConfig {
            max_n,
            weights: vec![1.0 / max_n as f64; max_n],
            smoothing: false,
        }
    }

    pub fn validate(&self) -> Result<(), BleuError> {
        if self.max_n == 0 {
            return Err(BleuError::Config("max_n must be at least 1".into()));
        }
        if self.weights.len() != self.max_n {
            return Err(BleuError::Config(format!(
                "{} weights for max_n = {}",
                self.weights.len(),
                self.max_n
            )));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(BleuError::Config("weights must be positive".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(BleuError::Config(format!("weights sum to {sum}")));
        }
        Ok(())
    }
}

/// Whitespace tokens of the NFC form.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize(text).split_whitespace().map(str::to_string).collect()
}

fn ngram_counts<'a, S: AsRef<str>>(tokens: &'a [S], n: usize) -> HashMap<Vec<&'a str>, u64> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts
            .entry(w.iter().map(AsRef::as_ref).collect())
            .or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and total candidate n-grams.
pub fn modified_precision<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> (u64, u64) {
    let cand = ngram_counts(candidate, n);
    if cand.is_empty() {
        return (0, 0);
    }
    let refs = ngram_counts(reference, n);
    let clipped = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    let total = (candidate.len() + 1 - n) as u64;
    (clipped, total)
}

/// `1` if `c >= r`, `exp(1 - r/c)` otherwise, and `0` for an empty
/// candidate against a non-empty reference.
pub fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c >= r {
        1.0
    } else if c == 0 {
        0.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

/// Sufficient statistics of a corpus: per-order counts and lengths.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    fn new(max_n: usize) -> BleuStats {
        BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            ..Default::default()
        }
    }

    fn add(&mut self, candidate: &[String], reference: &[String]) {
        self.candidate_len += candidate.len();
        self.reference_len += reference.len();
        for n in 1..=self.matches.len() {
            let (m, t) = modified_precision(candidate, reference, n);
            self.matches[n - 1] += m;
            self.totals[n - 1] += t;
        }
    }

    fn score(&self, config: &BleuConfig) -> (f64, Vec<f64>, f64) {
        let precisions: Vec<f64> = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| {
                if config.smoothing {
                    (m + 1) as f64 / (t + 1) as f64
                } else if t == 0 {
                    0.0
                } else {
                    m as f64 / t as f64
                }
            })
            .collect();
        let bp = brevity_penalty(self.candidate_len, self.reference_len);
        let bleu = if precisions.iter().any(|&p| p == 0.0) {
            0.0
        } else {
            let log_sum: f64 = config
                .weights
                .iter()
                .zip(&precisions)
                .map(|(w, p)| w * p.ln())
                .sum();
            bp * log_sum.exp()
        };
        (bleu, precisions, bp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub bleu: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub weights: Vec<f64>,
    pub sentences: usize,
    /// BLEU restricted to pairs whose record contains each type; `None`
    /// inside the map when no pair has that type. Absent without records.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_error_type: Option<BTreeMap<ErrorType, Option<f64>>>,
}

impl BleuReport {
    /// `BP · exp(Σ w_n log p_n)` from the report's own fields.
    pub fn recompute(&self) -> f64 {
        if self.precisions.iter().any(|&p| p == 0.0) {
            return 0.0;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.precisions)
            .map(|(w, p)| w * p.ln())
            .sum();
        self.brevity_penalty * s.exp()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-order plain-text table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<20}{:>10}", "metric", "value");
        let _ = writeln!(s, "{:<20}{:>10.4}", "bleu", self.bleu);
        for (i, p) in self.precisions.iter().enumerate() {
            let _ = writeln!(s, "{:<20}{:>10.4}", format!("p{}", i + 1), p);
        }
        let _ = writeln!(s, "{:<20}{:>10.4}", "brevity_penalty", self.brevity_penalty);
        let _ = writeln!(s, "{:<20}{:>10}", "candidate_len", self.candidate_len);
        let _ = writeln!(s, "{:<20}{:>10}", "reference_len", self.reference_len);
        let _ = writeln!(s, "{:<20}{:>10}", "sentences", self.sentences);
        if let Some(per) = &self.per_error_type {
            for t in ErrorType::ALL {
                let v = per.get(&t).copied().flatten();
                let cell = v.map_or_else(|| "-".to_string(), |b| format!("{b:.4}"));
                let _ = writeln!(s, "{:<20}{:>10}", format!("bleu[{t}]"), cell);
            }
        }
        s
    }
}

fn tokenized_stats<C, R>(pairs: &[(C, R)], max_n: usize) -> (BleuStats, Vec<(Vec<String>, Vec<String>)>)
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    let tokenized: Vec<(Vec<String>, Vec<String>)> = pairs
        .iter()
        .map(|(c, r)| (tokenize(c.as_ref()), tokenize(r.as_ref())))
        .collect();
    let mut stats = BleuStats::new(max_n);
    for (c, r) in &tokenized {
        stats.add(c, r);
    }
    (stats, tokenized)
}

/// Corpus BLEU over `(candidate, reference)` pairs.
pub fn corpus_bleu<C, R>(pairs: &[(C, R)], config: &BleuConfig) -> Result<BleuReport, BleuError>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    config.validate()?;
    if pairs.is_empty() {
        return Err(BleuError::EmptyCorpus);
    }
    let (stats, _) = tokenized_stats(pairs, config.max_n);
    Ok(report(&stats, config, pairs.len(), None))
}

fn report(
    stats: &BleuStats,
    config: &BleuConfig,
    sentences: usize,
    per_error_type: Option<BTreeMap<ErrorType, Option<f64>>>,
) -> BleuReport {
    let (bleu, precisions, bp) = stats.score(config);
    BleuReport {
        bleu,
        precisions,
        brevity_penalty: bp,
        candidate_len: stats.candidate_len,
        reference_len: stats.reference_len,
        matches: stats.matches.clone(),
        totals: stats.totals.clone(),
        weights: config.weights.clone(),
        sentences,
        per_error_type,
    }
}

/// Corpus BLEU plus per-type scores over the pairs whose corruption record
/// contains each error type.
pub fn corpus_bleu_by_type<C, R>(
    pairs: &[(C, R)],
    records: &[CorruptionRecord],
    config: &BleuConfig,
) -> Result<BleuReport, BleuError>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    config.validate()?;
    if pairs.is_empty() {
        return Err(BleuError::EmptyCorpus);
    }
    if records.len() != pairs.len() {
        return Err(BleuError::RecordMismatch {
            records: records.len(),
            pairs: pairs.len(),
        });
    }
    let (stats, tokenized) = tokenized_stats(pairs, config.max_n);
    let mut per_type: Vec<BleuStats> = (0..ErrorType::COUNT)
        .map(|_| BleuStats::new(config.max_n))
        .collect();
    let mut seen = [false; ErrorType::COUNT];
    for ((c, r), rec) in tokenized.iter().zip(records) {
        for t in ErrorType::ALL {
            if rec.contains(t) {
                per_type[t.index()].add(c, r);
                seen[t.index()] = true;
            }
        }
    }
    let map = ErrorType::ALL
        .into_iter()
        .map(|t| {
            let v = seen[t.index()].then(|| per_type[t.index()].score(config).0);
            (t, v)
        })
        .collect();
    Ok(report(&stats, config, pairs.len(), Some(map)))
}

/// Zip two line lists, rejecting different lengths.
pub fn zip_lines<'a>(
    candidates: &'a [String],
    references: &'a [String],
) -> Result<Vec<(&'a str, &'a str)>, BleuError> {
    if candidates.len() != references.len() {
        return Err(BleuError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    Ok(candidates
        .iter()
        .zip(references)
        .map(|(c, r)| (c.as_str(), r.as_str()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn clipped_unigram_example() {
        let c = toks("the the the the the the the");
        let r = toks("the cat is on the mat");
        assert_eq!(modified_precision(&c, &r, 1), (2, 7));
    }

    #[test]
    fn perfect_and_disjoint() {
        let c = toks("một hai ba bốn năm");
        for n in 1..=5 {
            assert_eq!(modified_precision(&c, &c, n), ((6 - n) as u64, (6 - n) as u64));
        }
        assert_eq!(modified_precision(&c, &c, 6), (0, 0));
        let d = toks("sáu bảy tám");
        assert_eq!(modified_precision(&c, &d, 1), (0, 5));
    }

    #[test]
    fn brevity_penalty_boundaries() {
        assert_eq!(brevity_penalty(10, 10), 1.0);
        assert_eq!(brevity_penalty(10, 5), 1.0);
        assert!((brevity_penalty(5, 10) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(brevity_penalty(0, 3), 0.0);
        assert_eq!(brevity_penalty(0, 0), 1.0);
    }

    #[test]
    fn identity_is_one() {
        let pairs = [("xin chào", "xin chào"), ("tôi đi học hôm nay", "tôi đi học hôm nay")];
        let r = corpus_bleu(&pairs, &BleuConfig::default()).unwrap();
        assert_eq!(r.bleu, 1.0);
    }

    #[test]
    fn empty_and_zero_precision() {
        let none: [(&str, &str); 0] = [];
        assert_eq!(corpus_bleu(&none, &BleuConfig::default()), Err(BleuError::EmptyCorpus));
        let short = [("a b c", "a b c")];
        let r = corpus_bleu(&short, &BleuConfig::default()).unwrap();
        assert_eq!(r.bleu, 0.0);
        let mut smooth = BleuConfig::default();
        smooth.smoothing = true;
        assert!(corpus_bleu(&short, &smooth).unwrap().bleu > 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = BleuConfig::default();
        c.weights[0] = 0.5;
        assert!(c.validate().is_err());
        assert!(BleuConfig::uniform(0).validate().is_err());
        BleuConfig::uniform(3).validate().unwrap();
    }

    #[test]
    fn per_type_breakdown_covers_all_types() {
        let pairs = [("chào bạn", "chào bạn")];
        let rec = CorruptionRecord::default();
        let r = corpus_bleu_by_type(&pairs, &[rec], &BleuConfig::uniform(2)).unwrap();
        let per = r.per_error_type.unwrap();
        assert_eq!(per.len(), 6);
        assert!(per.values().all(Option::is_none));
    }
}
