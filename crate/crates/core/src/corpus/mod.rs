//! Parallel corpus construction: ingest, length filter, split, corrupt and
//! persist.
//!
//! A split is stored as three aligned files: `<split>.src` (corrupted),
//! `<split>.tgt` (clean) and `<split>.rec` (one JSON corruption record per
//! line after a version line).

mod generator;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::errorgen::{splitmix64, CorruptionRecord, Corruptor};
use crate::orthography::normalize;

pub use generator::{generate_sentences, generate_unique_sentences, sentence};

/// Version line opening every `.rec` file.
pub const CORPUS_FORMAT: &str = "# vietspell-corpus v1";
pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Bundled clean sample, one sentence per line.
pub const BUNDLED_SAMPLE: &str = include_str!("../../data/sample_clean.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line} is not valid UTF-8")]
    Utf8 { path: PathBuf, line: usize },
    #[error("not enough sentences: {available} available, {requested} requested")]
    InsufficientData { available: usize, requested: usize },
    #[error("{path}: byte offset {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("{path}: unsupported corpus format {found:?} (expected {CORPUS_FORMAT:?})")]
    Version { path: PathBuf, found: String },
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> CorpusError {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Valid => 2,
            Split::Test => 3,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Split, String> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

/// Sentence counts per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub valid_count: usize,
    pub test_count: usize,
}

impl SplitSpec {
    /// Full-size corpus counts the scale factor is applied to.
    pub const FULL: SplitSpec = SplitSpec {
        train_count: 4_000_000,
        valid_count: 20_000,
        test_count: 6_000,
    };

    /// Workstation default.
    pub fn desk() -> SplitSpec {
        SplitSpec {
            train_count: 20_000,
            valid_count: 500,
            test_count: 500,
        }
    }

    /// `FULL` scaled by `factor`, rounded to the nearest sentence.
    pub fn scaled(factor: f64) -> SplitSpec {
        let f = |n: usize| (n as f64 * factor).round() as usize;
        SplitSpec {
            train_count: f(Self::FULL.train_count),
            valid_count: f(Self::FULL.valid_count),
            test_count: f(Self::FULL.test_count),
        }
    }

    pub fn total(&self) -> usize {
        self.train_count + self.valid_count + self.test_count
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_count,
            Split::Valid => self.valid_count,
            Split::Test => self.test_count,
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::desk()
    }
}

/// Read one sentence per line: NFC-normalised, blank lines and exact
/// duplicates dropped, first occurrence order kept.
pub fn ingest(path: &Path) -> Result<Vec<String>, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(line).map_err(|_| CorpusError::Utf8 {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        let s = normalize(line.trim());
        if !s.is_empty() && seen.insert(s.clone()) {
            out.push(s);
        }
    }
    Ok(out)
}

/// Same as [`ingest`] on in-memory text.
pub fn ingest_str(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    text.lines()
        .map(|l| normalize(l.trim()))
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect()
}

/// Keep sentences whose whitespace word count lies in `[min_words, max_words]`.
pub fn filter_length(sentences: Vec<String>, min_words: usize, max_words: usize) -> Vec<String> {
    sentences
        .into_iter()
        .filter(|s| (min_words..=max_words).contains(&s.split_whitespace().count()))
        .collect()
}

/// Disjoint clean sentence sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl Splits {
    pub fn get(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }
}

/// Shuffle the (deduplicated) sentences under `seed` and cut them into
/// train, valid and test in that order.
pub fn build_splits(
    sentences: Vec<String>,
    spec: &SplitSpec,
    seed: u64,
) -> Result<Splits, CorpusError> {
    let mut seen = HashSet::new();
    let mut pool: Vec<String> = sentences
        .into_iter()
        .map(|s| normalize(&s))
        .filter(|s| seen.insert(s.clone()))
        .collect();
    if pool.len() < spec.total() {
        return Err(CorpusError::InsufficientData {
            available: pool.len(),
            requested: spec.total(),
        });
    }
    // Sort first so the result does not depend on input order.
    pool.sort_unstable();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(splitmix64(seed)));
    let mut it = pool.into_iter();
    let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<_>>();
    Ok(Splits {
        train: take(spec.train_count),
        valid: take(spec.valid_count),
        test: take(spec.test_count),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub source: String,
    pub target: String,
    pub record: CorruptionRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub split: Split,
    pub pairs: Vec<Pair>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }

    /// Check that every record replays onto its target to give the source.
    pub fn verify(&self) -> Result<(), String> {
        for (i, p) in self.pairs.iter().enumerate() {
            let replayed = p.record.apply(&p.target).map_err(|e| format!("pair {i}: {e}"))?;
            if replayed != p.source {
                return Err(format!("pair {i}: record does not reproduce the source"));
            }
        }
        Ok(())
    }
}

/// Sentence id carrying the split in its high bits so that the three
/// splits draw independent error streams.
pub fn sentence_id(split: Split, index: usize) -> u64 {
    (split.salt() << 48) | index as u64
}

/// Corrupt every sentence of a split. Parallel over sentences; the result
/// does not depend on the thread count.
pub fn synthesize(split: Split, sentences: &[String], corruptor: &Corruptor) -> ParallelCorpus {
    let pairs = sentences
        .par_iter()
        .enumerate()
        .map(|(i, target)| {
            let (source, record) = corruptor.corrupt_sentence(sentence_id(split, i), target);
            Pair {
                source,
                target: target.clone(),
                record,
            }
        })
        .collect();
    ParallelCorpus { split, pairs }
}

pub fn split_paths(dir: &Path, split: Split) -> [PathBuf; 3] {
    ["src", "tgt", "rec"].map(|ext| dir.join(format!("{}.{ext}", split.name())))
}

/// Write the three split files into `dir` (created if missing).
pub fn save(corpus: &ParallelCorpus, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let [src_path, tgt_path, rec_path] = split_paths(dir, corpus.split);
    let mut src = String::new();
    let mut tgt = String::new();
    let mut rec = format!("{CORPUS_FORMAT}\n");
    for p in &corpus.pairs {
        src.push_str(&p.source);
        src.push('\n');
        tgt.push_str(&p.target);
        tgt.push('\n');
        rec.push_str(&serde_json::to_string(&p.record).expect("record serializes"));
        rec.push('\n');
    }
    for (path, text) in [(&src_path, src), (&tgt_path, tgt), (&rec_path, rec)] {
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CorpusError::io(path, e))
}

/// Lines of a newline-terminated file with their byte offsets.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let mut lines = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        let Some(len) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            return Err(CorpusError::Format {
                path: path.to_path_buf(),
                offset: bytes.len(),
                message: "truncated: last line has no terminating newline".into(),
            });
        };
        let line = std::str::from_utf8(&bytes[offset..offset + len]).map_err(|e| {
            CorpusError::Format {
                path: path.to_path_buf(),
                offset: offset + e.valid_up_to(),
                message: "invalid UTF-8".into(),
            }
        })?;
        lines.push((offset, line.to_string()));
        offset += len + 1;
    }
    Ok(lines)
}

/// Corruption records of a `.rec` file with their byte offsets, after
/// checking the format line.
fn read_record_lines(rec_path: &Path) -> Result<Vec<(usize, CorruptionRecord)>, CorpusError> {
    let rec = read_lines(rec_path)?;
    let Some((_, header)) = rec.first() else {
        return Err(CorpusError::Format {
            path: rec_path.to_path_buf(),
            offset: 0,
            message: "missing format line".into(),
        });
    };
    if header != CORPUS_FORMAT {
        return Err(CorpusError::Version {
            path: rec_path.to_path_buf(),
            found: header.clone(),
        });
    }
    rec[1..]
        .iter()
        .map(|(offset, line)| {
            let record = serde_json::from_str(line).map_err(|e| CorpusError::Format {
                path: rec_path.to_path_buf(),
                offset: offset + e.column().saturating_sub(1),
                message: e.to_string(),
            })?;
            Ok((*offset, record))
        })
        .collect()
}

/// Records of a `.rec` file.
pub fn read_records(rec_path: &Path) -> Result<Vec<CorruptionRecord>, CorpusError> {
    Ok(read_record_lines(rec_path)?.into_iter().map(|(_, r)| r).collect())
}

/// Read a split written by [`save`].
pub fn load(dir: &Path, split: Split) -> Result<ParallelCorpus, CorpusError> {
    let [src_path, tgt_path, rec_path] = split_paths(dir, split);
    let src = read_lines(&src_path)?;
    let tgt = read_lines(&tgt_path)?;
    let rec = read_record_lines(&rec_path)?;
    let n = rec.len();
    for (path, lines) in [(&src_path, &src), (&tgt_path, &tgt)] {
        if lines.len() != n {
            let offset = lines.get(n).map_or_else(
                || lines.last().map_or(0, |(o, l)| o + l.len() + 1),
                |(o, _)| *o,
            );
            return Err(CorpusError::Format {
                path: path.clone(),
                offset,
                message: format!("{} lines but {n} records", lines.len()),
            });
        }
    }
    let pairs = src
        .into_iter()
        .zip(tgt)
        .zip(rec)
        .map(|((source, target), (_, record))| Pair {
            source: source.1,
            target: target.1,
            record,
        })
        .collect();
    Ok(ParallelCorpus { split, pairs })
}

/// Aligned source and target lines of a split without records.
pub fn load_text_pairs(dir: &Path, split: Split) -> Result<(Vec<String>, Vec<String>), CorpusError> {
    let [src_path, tgt_path, _] = split_paths(dir, split);
    let src: Vec<String> = read_lines(&src_path)?.into_iter().map(|l| l.1).collect();
    let tgt: Vec<String> = read_lines(&tgt_path)?.into_iter().map(|l| l.1).collect();
    if src.len() != tgt.len() {
        return Err(CorpusError::Format {
            path: tgt_path,
            offset: 0,
            message: format!("{} source lines but {} target lines", src.len(), tgt.len()),
        });
    }
    Ok((src, tgt))
}

/// Count of applied edits per error type over a corpus.
pub fn type_counts(corpus: &ParallelCorpus) -> [usize; crate::errorgen::ErrorType::COUNT] {
    let mut counts = [0; crate::errorgen::ErrorType::COUNT];
    for p in &corpus.pairs {
        for e in &p.record.edits {
            counts[e.error_type.index()] += 1;
        }
    }
    counts
}
