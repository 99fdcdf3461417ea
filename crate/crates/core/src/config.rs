//! Run configuration: every tunable of the pipeline in one flat
//! `key = value` file.
//!
//! Lines are `dotted.key = value`; `#` starts a comment. Keys under `run.`
//! and `result.` are informational (manifests carry them) and ignored on
//! load, so a manifest can be fed back as a config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::bleu::BleuConfig;
use crate::corpus::SplitSpec;
use crate::corrector::{CorrectorConfig, EmbedderMode, TrainConfig};
use crate::embedder::{EmbedderConfig, MlmConfig};
use crate::errorgen::{CorruptionSpec, ErrorType};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where the clean sentences come from.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub splits: SplitSpec,
    pub min_words: usize,
    pub max_words: usize,
    /// When non-zero, this many distinct sentences are produced by the
    /// template generator instead of reading an input file.
    pub generate: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            // Fits the bundled 5000-sentence sample.
            splits: SplitSpec {
                train_count: 4000,
                valid_count: 500,
                test_count: 500,
            },
            min_words: 5,
            max_words: 60,
            generate: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub corruption: CorruptionSpec,
    pub corpus: CorpusConfig,
    pub embedder: EmbedderConfig,
    pub mlm: MlmConfig,
    pub corrector: CorrectorConfig,
    pub train: TrainConfig,
    pub bleu: BleuConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            corruption: CorruptionSpec::default(),
            corpus: CorpusConfig::default(),
            embedder: EmbedderConfig::default(),
            mlm: MlmConfig::default(),
            corrector: CorrectorConfig::default(),
            train: TrainConfig::default(),
            bleu: BleuConfig::default(),
        }
    }
}

trait Value: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! plain_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse_value(s: &str) -> Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

plain_value!(u64, usize, f64, bool, EmbedderMode);

impl Value for Option<u64> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s == "none" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("{e}"))
        }
    }
    fn render(&self) -> String {
        self.map_or("none".into(), |v| v.to_string())
    }
}

impl Value for Vec<f64> {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.split(',').map(|x| x.trim().parse().map_err(|e| format!("{e}"))).collect()
    }
    fn render(&self) -> String {
        self.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Declares the key table once for both reading and writing.
macro_rules! keys {
    ($($key:literal => $($field:ident).+;)*) => {
        fn entries(&self) -> Vec<(String, String)> {
            let mut out = vec![$(($key.to_string(), Value::render(&self.$($field).+)),)*];
            for t in ErrorType::ALL {
                out.push((format!("errorgen.ratio.{t}"), self.corruption.ratio(t).to_string()));
            }
            out
        }

        fn set_field(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
            let bad = |message: String| ConfigError::Value { key: key.to_string(), message };
            match key {
                $($key => self.$($field).+ = Value::parse_value(value).map_err(bad)?,)*
                _ => {
                    let t = key
                        .strip_prefix("errorgen.ratio.")
                        .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
                    let t: ErrorType = t.parse().map_err(|_| ConfigError::UnknownKey(key.to_string()))?;
                    let r = f64::parse_value(value).map_err(bad)?;
                    self.corruption.set_ratio(t, r);
                }
            }
            Ok(())
        }
    };
}

impl RunConfig {
    keys! {
        "seed" => seed;
        "errorgen.word_error_rate" => corruption.word_error_rate;
        "errorgen.edit_distance_max" => corruption.edit_distance_max;
        "corpus.train" => corpus.splits.train_count;
        "corpus.valid" => corpus.splits.valid_count;
        "corpus.test" => corpus.splits.test_count;
        "corpus.min_words" => corpus.min_words;
        "corpus.max_words" => corpus.max_words;
        "corpus.generate" => corpus.generate;
        "embedder.layers" => embedder.layers;
        "embedder.d_model" => embedder.d_model;
        "embedder.heads" => embedder.heads;
        "embedder.d_ff" => embedder.d_ff;
        "embedder.max_len" => embedder.max_len;
        "embedder.epochs" => mlm.epochs;
        "embedder.max_tokens" => mlm.max_tokens;
        "embedder.lr" => mlm.lr;
        "embedder.warmup_steps" => mlm.warmup_steps;
        "embedder.weight_decay" => mlm.weight_decay;
        "embedder.dropout" => mlm.dropout;
        "embedder.mask_prob" => mlm.mask.prob;
        "embedder.mask_frac" => mlm.mask.mask_frac;
        "embedder.random_frac" => mlm.mask.random_frac;
        "embedder.max_steps" => mlm.max_steps;
        "corrector.encoder_layers" => corrector.encoder_layers;
        "corrector.decoder_layers" => corrector.decoder_layers;
        "corrector.d_model" => corrector.d_model;
        "corrector.heads" => corrector.heads;
        "corrector.d_ff" => corrector.d_ff;
        "corrector.max_len" => corrector.max_len;
        "corrector.embedder_mode" => corrector.embedder_mode;
        "train.epochs" => train.epochs;
        "train.dropout" => train.dropout;
        "train.label_smoothing" => train.label_smoothing;
        "train.lr" => train.lr;
        "train.warmup_steps" => train.warmup_steps;
        "train.weight_decay" => train.weight_decay;
        "train.max_tokens" => train.max_tokens;
        "train.patience" => train.patience;
        "train.finetune_lr_scale" => train.finetune_lr_scale;
        "train.beam" => train.beam;
        "train.max_steps" => train.max_steps;
        "bleu.max_n" => bleu.max_n;
        "bleu.weights" => bleu.weights;
        "bleu.smoothing" => bleu.smoothing;
    }

    /// The desk-scale experiment: 20k/500/500 generated sentences of 5 to
    /// 20 words.
    pub fn toy() -> RunConfig {
        let mut c = RunConfig::default();
        c.corpus = CorpusConfig {
            splits: SplitSpec::desk(),
            min_words: 5,
            max_words: 20,
            generate: 21_000,
        };
        c.train.epochs = 8;
        // Small data trains better with less dropout and a faster schedule.
        c.train.dropout = 0.1;
        c.train.lr = 2e-3;
        c.mlm.epochs = 2;
        c
    }

    pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
        match name {
            "default" => Ok(RunConfig::default()),
            "toy" => Ok(RunConfig::toy()),
            _ => Err(ConfigError::Invalid(format!("unknown preset {name:?} (expected default or toy)"))),
        }
    }

    /// Set one key. `seed` also seeds the corruption stream and training.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if key.starts_with("run.") || key.starts_with("result.") {
            return Ok(());
        }
        self.set_field(key, value.trim())?;
        if key == "seed" {
            self.reseed();
        }
        Ok(())
    }

    fn reseed(&mut self) {
        self.corruption.seed = self.seed;
        self.mlm.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.seed = seed;
        self.reseed();
        self
    }

    /// Apply every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.corruption.validate().map_err(|e| invalid(&e))?;
        self.train.validate().map_err(|e| invalid(&e))?;
        self.bleu.validate().map_err(|e| invalid(&e))?;
        let c = &self.corpus;
        if c.min_words == 0 || c.min_words > c.max_words {
            return Err(ConfigError::Invalid("corpus word bounds must satisfy 0 < min <= max".into()));
        }
        if c.generate > 0 && c.max_words < 3 {
            return Err(ConfigError::Invalid("the generator needs corpus.max_words >= 3".into()));
        }
        for (what, d, h) in [
            ("embedder", self.embedder.d_model, self.embedder.heads),
            ("corrector", self.corrector.d_model, self.corrector.heads),
        ] {
            if h == 0 || d % h != 0 {
                return Err(ConfigError::Invalid(format!("{what}.d_model must be a multiple of {what}.heads")));
            }
        }
        let m = &self.mlm.mask;
        if !(0.0..=1.0).contains(&m.prob) || m.mask_frac < 0.0 || m.random_frac < 0.0 || m.mask_frac + m.random_frac > 1.0
        {
            return Err(ConfigError::Invalid("masking fractions out of range".into()));
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// A run manifest: the resolved config plus informational `run.*` and
/// `result.*` entries.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub run: BTreeMap<String, String>,
    pub result: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        let mut m = Manifest::default();
        m.run("command", command);
        m.run("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn run(&mut self, key: &str, value: impl ToString) {
        self.run.insert(key.to_string(), value.to_string());
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.result.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut s = String::new();
        for (k, v) in &self.run {
            let _ = writeln!(s, "run.{k} = {v}");
        }
        s.push_str(&config.to_text());
        for (k, v) in &self.result {
            let _ = writeln!(s, "result.{k} = {v}");
        }
        s
    }

    pub fn write(&self, config: &RunConfig, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render(config))
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        RunConfig::parse(s)
    }
}
