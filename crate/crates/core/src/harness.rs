//! End-to-end experiment: dataset, edit-distance baseline, identity floor,
//! embedder, and correctors with and without the embedder, all from one
//! seed, ending in a comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::baseline::{correct_baseline, BaselineError, FrequencyLexicon};
use crate::bleu::{corpus_bleu_by_type, BleuError, BleuReport};
use crate::config::{ConfigError, Manifest, RunConfig};
use crate::corpus::{self, CorpusError, ParallelCorpus, Split, BUNDLED_SAMPLE};
use crate::corrector::{train_corrector, CorrectorArtifact, EmbedderMode};
use crate::embedder::{train_mlm, EmbedderArtifact};
use crate::errorgen::{Corruptor, ErrorType, SpecError};
use crate::nn::{write_checkpoint, CheckpointError};
use crate::training::TrainError;
use crate::vocab::{Vocab, VocabError};

/// Any failure of a pipeline stage, with a stable process exit code.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Bleu(#[from] BleuError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{0}")]
    Data(String),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> PipelineError {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 config, 3 I/O, 4 data, 5 training, 6 checkpoint.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) | PipelineError::Spec(_) => 2,
            PipelineError::Io { .. } => 3,
            PipelineError::Corpus(CorpusError::Io { .. }) => 3,
            PipelineError::Baseline(BaselineError::Io { .. }) => 3,
            PipelineError::Bleu(BleuError::Config(_)) => 2,
            PipelineError::Corpus(_)
            | PipelineError::Bleu(_)
            | PipelineError::Baseline(_)
            | PipelineError::Vocab(_)
            | PipelineError::Data(_) => 4,
            PipelineError::Train(TrainError::Config(_)) => 2,
            PipelineError::Train(TrainError::Checkpoint(_)) => 6,
            PipelineError::Train(_) => 5,
            PipelineError::Checkpoint(CheckpointError::Io { .. }) => 3,
            PipelineError::Checkpoint(_) => 6,
        }
    }
}

/// Clean sentences for a run: generated, read from `input`, or the bundled
/// sample.
pub fn clean_sentences(config: &RunConfig, input: Option<&Path>) -> Result<Vec<String>, PipelineError> {
    let c = &config.corpus;
    let raw = if c.generate > 0 {
        corpus::generate_unique_sentences(config.seed, c.generate, c.min_words, c.max_words)
    } else if let Some(path) = input {
        corpus::ingest(path)?
    } else {
        corpus::ingest_str(BUNDLED_SAMPLE)
    };
    Ok(corpus::filter_length(raw, c.min_words, c.max_words))
}

/// Split and corrupt `clean`, returning train, valid and test corpora.
pub fn build_dataset(config: &RunConfig, clean: Vec<String>) -> Result<[ParallelCorpus; 3], PipelineError> {
    config.validate()?;
    let splits = corpus::build_splits(clean, &config.corpus.splits, config.seed)?;
    let corruptor = Corruptor::new(config.corruption.clone())?;
    Ok(Split::ALL.map(|s| corpus::synthesize(s, splits.get(s), &corruptor)))
}

/// Record split sizes and applied error-type ratios in a manifest.
pub fn summarize_dataset(data: &[ParallelCorpus], manifest: &mut Manifest) {
    let mut totals = [0usize; ErrorType::COUNT];
    for c in data {
        manifest.result(&format!("{}.count", c.split.name()), c.len());
        for (t, n) in totals.iter_mut().zip(corpus::type_counts(c)) {
            *t += n;
        }
    }
    let sum: usize = totals.iter().sum();
    manifest.result("edits", sum);
    for t in ErrorType::ALL {
        let r = if sum == 0 { 0.0 } else { totals[t.index()] as f64 / sum as f64 };
        manifest.result(&format!("ratio.{t}"), format!("{r:.4}"));
    }
}

/// Character vocabulary over both sides of the training split.
pub fn build_vocab(train: &ParallelCorpus) -> Result<Vocab, VocabError> {
    let texts: Vec<&str> = train.sources().chain(train.targets()).collect();
    Vocab::build(&texts)
}

/// Corrector outputs for every source of `corpus`.
pub fn decode_corpus(
    art: &CorrectorArtifact,
    corpus: &ParallelCorpus,
    beam: usize,
) -> Result<Vec<String>, TrainError> {
    corpus
        .sources()
        .map(|s| art.correct(s, beam).map(|c| c.output))
        .collect()
}

/// BLEU of `predictions` against a corpus' targets, with per-type scores.
pub fn score(predictions: &[String], corpus: &ParallelCorpus, config: &RunConfig) -> Result<BleuReport, BleuError> {
    let pairs: Vec<(&str, &str)> = predictions.iter().map(String::as_str).zip(corpus.targets()).collect();
    let records: Vec<_> = corpus.pairs.iter().map(|p| p.record.clone()).collect();
    corpus_bleu_by_type(&pairs, &records, &config.bleu)
}

pub const IDENTITY: &str = "identity (no correction)";
pub const BASELINE: &str = "edit-distance baseline";
pub const NEURAL_PLAIN: &str = "transformer";
pub const NEURAL_EMBEDDER: &str = "transformer + embedder";

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub model: String,
    /// `None` when the stage failed.
    pub bleu: Option<BleuReport>,
    pub failure: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub test_sentences: usize,
    pub rows: Vec<ReportRow>,
    /// Auxiliary stages (dataset, embedder) and their timings or failures.
    pub stages: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn row(&self, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn bleu(&self, model: &str) -> Option<f64> {
        self.row(model).and_then(|r| r.bleu.as_ref()).map(|b| b.bleu)
    }

    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.failure.is_some()) || self.stages.values().any(|v| v.starts_with("FAILED"))
    }

    /// Model rows with overall and per-error-type BLEU.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<26}{:>8}", "model", "BLEU");
        for t in ErrorType::ALL {
            let _ = write!(s, "{:>15}", t.name());
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{:<26}", row.model);
            match (&row.bleu, &row.failure) {
                (Some(b), _) => {
                    let _ = write!(s, "{:>8.4}", b.bleu);
                    let per = b.per_error_type.as_ref();
                    for t in ErrorType::ALL {
                        let v = per.and_then(|m| m.get(&t).copied().flatten());
                        let _ = write!(s, "{:>15}", v.map_or("-".into(), |v| format!("{v:.4}")));
                    }
                }
                (None, failure) => {
                    let _ = write!(s, "{:>8}  {}", "FAILED", failure.as_deref().unwrap_or(""));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Paths of the experiment outputs under one directory.
pub struct ExperimentPaths {
    pub root: PathBuf,
}

impl ExperimentPaths {
    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }
    pub fn lexicon(&self) -> PathBuf {
        self.root.join("baseline.lexicon.tsv")
    }
    pub fn embedder(&self) -> PathBuf {
        self.root.join("embedder.ckpt")
    }
    pub fn corrector(&self, mode: EmbedderMode) -> PathBuf {
        self.root.join(format!("corrector-{mode}.ckpt"))
    }
    pub fn predictions(&self, name: &str) -> PathBuf {
        self.root.join(format!("predictions.{name}.txt"))
    }
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), PipelineError> {
    let mut text = lines.join("\n");
    if !lines.is_empty() {
        text.push('\n');
    }
    write(path, &text)
}

/// Run every stage, writing artifacts and reports under `out`. A failing
/// model stage is reported as FAILED and the rest still run; only a failed
/// dataset stage aborts.
pub fn run_experiment(config: &RunConfig, input: Option<&Path>, out: &Path) -> Result<ExperimentReport, PipelineError> {
    config.validate()?;
    let paths = ExperimentPaths { root: out.to_path_buf() };
    fs::create_dir_all(paths.data()).map_err(|e| PipelineError::io(out, e))?;
    let mut stages = BTreeMap::new();
    let mut manifest = Manifest::new("experiment");

    let t = Instant::now();
    let data = build_dataset(config, clean_sentences(config, input)?)?;
    for c in &data {
        corpus::save(c, &paths.data())?;
    }
    summarize_dataset(&data, &mut manifest);
    manifest.write(config, &paths.data().join("manifest.cfg")).map_err(|e| PipelineError::io(out, e))?;
    stages.insert("dataset".to_string(), format!("{:.1}s", t.elapsed().as_secs_f64()));
    let [train, valid, test] = &data;
    log::info!("dataset: {} / {} / {} pairs", train.len(), valid.len(), test.len());

    let mut rows = Vec::new();
    let mut record = |model: &str, t: Instant, result: Result<(Vec<String>, BleuReport), PipelineError>| {
        let row = match result {
            Ok((pred, bleu)) => {
                let name = model.split_whitespace().next().unwrap_or(model).to_string();
                let slug = if model == NEURAL_EMBEDDER { "transformer-embedder".into() } else { name };
                if let Err(e) = write_lines(&paths.predictions(&slug), &pred) {
                    log::warn!("{e}");
                }
                log::info!("{model}: BLEU {:.4}", bleu.bleu);
                ReportRow {
                    model: model.to_string(),
                    bleu: Some(bleu),
                    failure: None,
                    seconds: t.elapsed().as_secs_f64(),
                }
            }
            Err(e) => {
                log::error!("{model} FAILED: {e}");
                ReportRow {
                    model: model.to_string(),
                    bleu: None,
                    failure: Some(e.to_string()),
                    seconds: t.elapsed().as_secs_f64(),
                }
            }
        };
        rows.push(row);
    };

    let t = Instant::now();
    let identity: Vec<String> = test.sources().map(str::to_string).collect();
    let r = score(&identity, test, config).map(|b| (identity, b)).map_err(PipelineError::from);
    record(IDENTITY, t, r);

    let t = Instant::now();
    let r = (|| {
        let targets: Vec<&str> = train.targets().collect();
        let lexicon = FrequencyLexicon::build(&targets)?;
        lexicon.save(&paths.lexicon())?;
        let pred: Vec<String> = test.sources().map(|s| correct_baseline(s, &lexicon)).collect();
        let b = score(&pred, test, config)?;
        Ok((pred, b))
    })();
    record(BASELINE, t, r);

    let vocab = build_vocab(train)?;
    let neural = |mode: EmbedderMode, embedder: Option<&EmbedderArtifact>| -> Result<(Vec<String>, BleuReport), PipelineError> {
        let mut cc = config.corrector;
        cc.embedder_mode = mode;
        let art = CorrectorArtifact::new(cc, vocab.clone(), embedder, config.seed, config.train.finetune_lr_scale)?;
        let outcome = train_corrector(train, valid, art, &config.train, None, &mut |_| Ok(()))?;
        let path = paths.corrector(mode);
        write_checkpoint(&path, &outcome.artifact.to_checkpoint())?;
        outcome
            .log
            .save(&path.with_extension("log.tsv"))
            .map_err(|e| PipelineError::io(&path, e))?;
        let pred = decode_corpus(&outcome.artifact, test, config.train.beam)?;
        let b = score(&pred, test, config)?;
        Ok((pred, b))
    };

    let t = Instant::now();
    record(NEURAL_PLAIN, t, neural(EmbedderMode::None, None));

    let t = Instant::now();
    let embedder = (|| {
        let targets: Vec<&str> = train.targets().collect();
        let (art, log) = train_mlm(&targets, vocab.clone(), config.embedder, &config.mlm)?;
        write_checkpoint(&paths.embedder(), &art.to_checkpoint())?;
        log.save(&paths.embedder().with_extension("log.tsv"))
            .map_err(|e| PipelineError::io(&paths.embedder(), e))?;
        Ok::<_, PipelineError>(art)
    })();
    let t_embed = t.elapsed().as_secs_f64();
    let with_mode = match config.corrector.embedder_mode {
        EmbedderMode::None => EmbedderMode::Frozen,
        m => m,
    };
    let t = Instant::now();
    match embedder {
        Ok(e) => {
            stages.insert("embedder".to_string(), format!("{t_embed:.1}s"));
            record(NEURAL_EMBEDDER, t, neural(with_mode, Some(&e)));
        }
        Err(e) => {
            stages.insert("embedder".to_string(), format!("FAILED: {e}"));
            record(NEURAL_EMBEDDER, t, Err(e));
        }
    }

    let report = ExperimentReport {
        seed: config.seed,
        test_sentences: test.len(),
        rows,
        stages,
    };
    write(&out.join("report.txt"), &report.to_table())?;
    write(&out.join("report.json"), &report.to_json())?;
    let mut m = Manifest::new("experiment");
    for row in &report.rows {
        let key = row.model.replace(' ', "_");
        match &row.bleu {
            Some(b) => m.result(&format!("bleu.{key}"), format!("{:.6}", b.bleu)),
            None => m.result(&format!("bleu.{key}"), "FAILED"),
        }
    }
    m.write(config, &out.join("manifest.cfg")).map_err(|e| PipelineError::io(out, e))?;
    let failed = out.join("FAILED");
    if report.failed() {
        let reasons: Vec<String> = report
            .rows
            .iter()
            .filter_map(|r| r.failure.as_ref().map(|f| format!("{}: {f}", r.model)))
            .collect();
        write_lines(&failed, &reasons)?;
    } else if failed.exists() {
        fs::remove_file(&failed).map_err(|e| PipelineError::io(&failed, e))?;
    }
    Ok(report)
}
