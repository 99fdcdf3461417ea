//! Command-line front end. Payload goes to stdout, diagnostics to stderr.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::baseline::{correct_baseline, FrequencyLexicon};
use crate::bleu::{corpus_bleu, corpus_bleu_by_type, zip_lines, BleuError, BleuReport};
use crate::config::{ConfigError, Manifest, RunConfig};
use crate::corpus::{self, Split, CORPUS_FORMAT_VERSION};
use crate::corrector::{train_corrector, CorrectorArtifact, EmbedderMode, TrainState};
use crate::embedder::{train_mlm, EmbedderArtifact};
use crate::errorgen::CorruptionRecord;
use crate::harness::{self, PipelineError, BASELINE, IDENTITY};
use crate::nn::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};

#[derive(Debug, Parser)]
#[command(name = "vietspell", about = "Vietnamese spelling-error synthesis, correction and evaluation")]
#[command(disable_version_flag = true)]
pub struct Cli {
    /// Print toolkit and file-format versions.
    #[arg(long, short = 'V')]
    pub version: bool,
    /// Cap on worker threads (numerics stay single-threaded).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named starting point: default or toy.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override one key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    /// Preset, then file, then `--set`, then `--seed`.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut c = match &self.preset {
            Some(p) => RunConfig::preset(p)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            c.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            c = c.with_seed(seed);
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build corrupted train/valid/test splits from clean text.
    Synth {
        /// Clean text, one sentence per line (default: bundled sample).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train the masked-LM embedder on the clean side of the training split.
    TrainEmbedder {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train the corrector on a synthesized data directory.
    TrainCorrector {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Embedder checkpoint (not needed with --embedder-mode none).
        #[arg(long)]
        embedder: Option<PathBuf>,
        #[arg(long)]
        embedder_mode: Option<EmbedderMode>,
        /// Continue from a training-state file written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Correct sentences, one per line.
    Correct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        embedder: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        beam: usize,
        /// Input file (default: stdin).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Emit JSON lines with scores.
        #[arg(long)]
        json: bool,
        /// Write a run manifest here.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Score predictions against references with corpus BLEU.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Corruption records, for per-error-type scores.
        #[arg(long)]
        rec: Option<PathBuf>,
        /// Also score the edit-distance baseline and the identity corrector.
        #[arg(long, requires_all = ["src", "lexicon"])]
        baseline: bool,
        /// Corrupted sources (with --baseline).
        #[arg(long)]
        src: Option<PathBuf>,
        /// Baseline lexicon TSV (with --baseline); `synth` writes one as
        /// `lexicon.tsv`.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// JSON report path.
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the whole comparison experiment.
    Experiment {
        #[arg(long)]
        out: PathBuf,
        /// Clean text (ignored when the config generates sentences).
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

pub fn version_text() -> String {
    format!(
        "vietspell {}\ncheckpoint format {}\ncorpus format {}\n",
        env!("CARGO_PKG_VERSION"),
        CHECKPOINT_VERSION,
        CORPUS_FORMAT_VERSION
    )
}

/// Baseline lexicon written next to the splits by `synth`.
pub const LEXICON_FILE: &str = "lexicon.tsv";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |e| PipelineError::io(path, e)
}

fn read_lines(path: &Path) -> Result<Vec<String>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_embedder(path: &Path) -> Result<EmbedderArtifact, PipelineError> {
    Ok(EmbedderArtifact::from_checkpoint(&read_checkpoint(path)?)?)
}

fn synth(input: Option<&Path>, out: &Path, config: &RunConfig) -> Result<(), PipelineError> {
    if let Some(p) = input {
        if !p.exists() {
            return Err(PipelineError::io(p, io::Error::new(io::ErrorKind::NotFound, "input file not found")));
        }
    }
    let data = harness::build_dataset(config, harness::clean_sentences(config, input)?)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    for c in &data {
        corpus::save(c, out)?;
    }
    let targets: Vec<&str> = data[0].targets().collect();
    let lexicon_path = out.join(LEXICON_FILE);
    FrequencyLexicon::build(&targets)?.save(&lexicon_path)?;
    let mut m = Manifest::new("synth");
    m.run("input", input.map_or("<bundled sample>".into(), |p| p.display().to_string()));
    harness::summarize_dataset(&data, &mut m);
    let path = out.join("manifest.cfg");
    m.write(config, &path).map_err(io_err(&path))?;
    eprintln!("wrote {} / {} / {} pairs to {}", data[0].len(), data[1].len(), data[2].len(), out.display());
    Ok(())
}

fn train_embedder_cmd(data: &Path, out: &Path, config: &RunConfig) -> Result<(), PipelineError> {
    let train = corpus::load(data, Split::Train)?;
    let vocab = harness::build_vocab(&train)?;
    let targets: Vec<&str> = train.targets().collect();
    let (art, log) = train_mlm(&targets, vocab, config.embedder, &config.mlm)?;
    let ckpt = art.to_checkpoint();
    write_checkpoint(out, &ckpt)?;
    let log_path = sibling(out, ".log.tsv");
    log.save(&log_path).map_err(io_err(&log_path))?;
    let mut m = Manifest::new("train-embedder");
    m.run("data", data.display());
    m.run("out", out.display());
    m.result("digest", ckpt.digest());
    if let Some(last) = log.rows.last() {
        m.result("final_train_loss", format!("{:.6}", last.train_loss));
    }
    let path = sibling(out, ".manifest.cfg");
    m.write(config, &path).map_err(io_err(&path))?;
    Ok(())
}

fn train_corrector_cmd(
    data: &Path,
    out: &Path,
    embedder: Option<&Path>,
    resume: Option<&Path>,
    config: &RunConfig,
) -> Result<(), PipelineError> {
    let train = corpus::load(data, Split::Train)?;
    let valid = corpus::load(data, Split::Valid)?;
    let mode = config.corrector.embedder_mode;
    let emb = match (mode, embedder) {
        (EmbedderMode::None, _) => None,
        (_, Some(p)) => Some(load_embedder(p)?),
        (_, None) => {
            return Err(ConfigError::Invalid(format!("--embedder is required with embedder mode {mode}")).into());
        }
    };
    let vocab = match &emb {
        Some(e) => e.vocab.clone(),
        None => harness::build_vocab(&train)?,
    };
    let art = CorrectorArtifact::new(config.corrector, vocab, emb.as_ref(), config.seed, config.train.finetune_lr_scale)?;
    let state = match resume {
        Some(p) => Some(TrainState::from_checkpoint(&read_checkpoint(p)?, &art.params)?),
        None => None,
    };
    let state_path = sibling(out, ".state");
    let mut save_state = |s: &TrainState| -> Result<(), crate::training::TrainError> {
        write_checkpoint(&state_path, &s.to_checkpoint())?;
        Ok(())
    };
    let outcome = train_corrector(&train, &valid, art, &config.train, state, &mut save_state)?;
    write_checkpoint(out, &outcome.artifact.to_checkpoint())?;
    let log_path = sibling(out, ".log.tsv");
    outcome.log.save(&log_path).map_err(io_err(&log_path))?;
    let mut m = Manifest::new("train-corrector");
    m.run("data", data.display());
    m.run("out", out.display());
    if let Some(p) = embedder {
        m.run("embedder", p.display());
    }
    if let Some(p) = resume {
        m.run("resume", p.display());
    }
    if let Some(e) = outcome.best_epoch {
        m.result("best_epoch", e);
    }
    if let Some(v) = outcome.state.best_valid {
        m.result("best_valid_loss", format!("{v:.6}"));
    }
    let path = sibling(out, ".manifest.cfg");
    m.write(config, &path).map_err(io_err(&path))?;
    Ok(())
}

fn correct_cmd(
    model: &Path,
    embedder: Option<&Path>,
    beam: usize,
    input: Option<&Path>,
    json: bool,
    manifest: Option<&Path>,
) -> Result<(), PipelineError> {
    if beam == 0 {
        return Err(ConfigError::Invalid("--beam must be at least 1".into()).into());
    }
    let emb = embedder.map(load_embedder).transpose()?;
    let art = CorrectorArtifact::from_checkpoint(&read_checkpoint(model)?, emb)?;
    let text = match input {
        Some(p) => fs::read_to_string(p).map_err(io_err(p))?,
        None => {
            let mut s = String::new();
            io::stdin()
                .lock()
                .read_to_string(&mut s)
                .map_err(io_err(Path::new("<stdin>")))?;
            s
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut count = 0usize;
    for line in text.lines() {
        let c = art.correct(line, beam)?;
        let written = if json {
            writeln!(out, "{}", serde_json::to_string(&c).expect("correction serializes"))
        } else {
            writeln!(out, "{}", c.output)
        };
        written.map_err(io_err(Path::new("<stdout>")))?;
        count += 1;
    }
    if let Some(path) = manifest {
        let mut m = Manifest::new("correct");
        m.run("model", model.display());
        m.run("beam", beam);
        if let Some(p) = embedder {
            m.run("embedder", p.display());
        }
        m.result("sentences", count);
        m.write(&RunConfig::default(), path).map_err(io_err(path))?;
    }
    Ok(())
}

fn score_lines(
    pred: &[String],
    refs: &[String],
    records: Option<&[CorruptionRecord]>,
    config: &RunConfig,
) -> Result<BleuReport, BleuError> {
    let pairs = zip_lines(pred, refs)?;
    match records {
        Some(r) => corpus_bleu_by_type(&pairs, r, &config.bleu),
        None => corpus_bleu(&pairs, &config.bleu),
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cmd(
    pred: &Path,
    reference: &Path,
    rec: Option<&Path>,
    baseline: bool,
    src: Option<&Path>,
    lexicon: Option<&Path>,
    report: &Path,
    manifest: Option<&Path>,
    config: &RunConfig,
) -> Result<(), PipelineError> {
    let preds = read_lines(pred)?;
    let refs = read_lines(reference)?;
    let records = rec.map(corpus::read_records).transpose()?;
    let main = score_lines(&preds, &refs, records.as_deref(), config)?;
    let mut stdout = io::stdout().lock();
    let w = |s: &mut io::StdoutLock, text: &str| s.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")));
    w(&mut stdout, &main.to_table())?;
    let mut json = serde_json::json!({ "prediction": main });
    if baseline {
        let (src, lexicon) = (src.expect("clap requires --src"), lexicon.expect("clap requires --lexicon"));
        let sources = read_lines(src)?;
        let lex = FrequencyLexicon::load(lexicon)?;
        let base: Vec<String> = sources.iter().map(|s| correct_baseline(s, &lex)).collect();
        let rows = [
            (IDENTITY, score_lines(&sources, &refs, records.as_deref(), config)?),
            (BASELINE, score_lines(&base, &refs, records.as_deref(), config)?),
            ("prediction", main.clone()),
        ];
        let table = harness::ExperimentReport {
            seed: config.seed,
            test_sentences: refs.len(),
            rows: rows
                .iter()
                .map(|(m, b)| harness::ReportRow {
                    model: m.to_string(),
                    bleu: Some(b.clone()),
                    failure: None,
                    seconds: 0.0,
                })
                .collect(),
            stages: Default::default(),
        };
        w(&mut stdout, "\n")?;
        w(&mut stdout, &table.to_table())?;
        json["identity"] = serde_json::to_value(&rows[0].1).expect("report serializes");
        json["baseline"] = serde_json::to_value(&rows[1].1).expect("report serializes");
    }
    fs::write(report, serde_json::to_string_pretty(&json).expect("json")).map_err(io_err(report))?;
    if let Some(path) = manifest {
        let mut m = Manifest::new("evaluate");
        m.run("pred", pred.display());
        m.run("ref", reference.display());
        m.result("bleu", format!("{:.6}", main.bleu));
        m.write(config, path).map_err(io_err(path))?;
    }
    Ok(())
}

fn experiment_cmd(out: &Path, input: Option<&Path>, config: &RunConfig) -> Result<(), PipelineError> {
    let report = harness::run_experiment(config, input, out)?;
    print!("{}", report.to_table());
    if report.failed() {
        eprintln!("some stages FAILED; see {}", out.join("FAILED").display());
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), PipelineError> {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    if cli.version {
        print!("{}", version_text());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(ConfigError::Invalid("no subcommand given (see --help)".into()).into());
    };
    match command {
        Command::Synth { input, out, config } => synth(input.as_deref(), &out, &config.resolve()?),
        Command::TrainEmbedder { data, out, config } => train_embedder_cmd(&data, &out, &config.resolve()?),
        Command::TrainCorrector {
            data,
            out,
            embedder,
            embedder_mode,
            resume,
            config,
        } => {
            let mut c = config.resolve()?;
            if let Some(m) = embedder_mode {
                c.corrector.embedder_mode = m;
            }
            train_corrector_cmd(&data, &out, embedder.as_deref(), resume.as_deref(), &c)
        }
        Command::Correct {
            model,
            embedder,
            beam,
            input,
            json,
            manifest,
        } => correct_cmd(&model, embedder.as_deref(), beam, input.as_deref(), json, manifest.as_deref()),
        Command::Evaluate {
            pred,
            reference,
            rec,
            baseline,
            src,
            lexicon,
            report,
            manifest,
            config,
        } => evaluate_cmd(
            &pred,
            &reference,
            rec.as_deref(),
            baseline,
            src.as_deref(),
            lexicon.as_deref(),
            &report,
            manifest.as_deref(),
            &config.resolve()?,
        ),
        Command::Experiment { out, input, config } => experiment_cmd(&out, input.as_deref(), &config.resolve()?),
    }
}

/// Parse arguments, run, and map failures to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
