//! Encoder-decoder transformer that rewrites a noisy sentence into its
//! corrected form, one character at a time.
//!
//! The encoder reads the embedder's hidden states through a linear
//! adapter (or, with no embedder, its own token embeddings). The decoder is
//! causal over the output prefix and attends to the encoder output.

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ParallelCorpus;
use crate::embedder::{load_tensors, named_tensors, pack, sequence, Embedder, EmbedderArtifact, EmbedderConfig};
use crate::nn::{
    Activation, Adam, AdamConfig, AdamState, AttnLayout, Checkpoint, CheckpointError, DecoderLayerParams,
    EncoderLayerParams, LinearParams, LrSchedule, NodeId, ParamId, ParamStore, Real, Tape,
};
use crate::orthography::normalize;
use crate::search::{beam_search, Hypothesis, StepScorer};
use crate::training::{check_finite, epoch_order, step_rng, token_batches, LogRow, TrainError, TrainLog};
use crate::vocab::{Vocab, BOS, EOS};

pub const CORRECTOR_KIND: &str = "corrector";
pub const TRAIN_STATE_KIND: &str = "corrector-train-state";

/// Dropout inside the embedder while it is being fine-tuned.
const FINETUNE_EMBEDDER_DROPOUT: f64 = 0.1;

/// How the encoder sees the source sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderMode {
    /// Embedder states are precomputed and not updated.
    #[default]
    Frozen,
    /// Embedder weights train along with the corrector at a reduced rate.
    FineTune,
    /// No embedder: the encoder reads the corrector's own token embeddings.
    None,
}

impl fmt::Display for EmbedderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbedderMode::Frozen => "frozen",
            EmbedderMode::FineTune => "finetune",
            EmbedderMode::None => "none",
        })
    }
}

impl FromStr for EmbedderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "frozen" => Ok(EmbedderMode::Frozen),
            "finetune" | "fine-tune" | "fine_tune" => Ok(EmbedderMode::FineTune),
            "none" => Ok(EmbedderMode::None),
            _ => Err(format!("unknown embedder mode {s:?} (expected frozen, finetune or none)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectorConfig {
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub embedder_mode: EmbedderMode,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        CorrectorConfig {
            encoder_layers: 2,
            decoder_layers: 2,
            d_model: 64,
            heads: 4,
            d_ff: 256,
            max_len: 256,
            embedder_mode: EmbedderMode::Frozen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u64,
    pub dropout: f64,
    pub label_smoothing: f64,
    pub lr: f64,
    pub warmup_steps: u64,
    pub weight_decay: f64,
    /// Source tokens per batch.
    pub max_tokens: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: u64,
    /// Learning-rate multiplier for embedder weights when fine-tuning.
    pub finetune_lr_scale: f64,
    pub beam: usize,
    pub seed: u64,
    pub max_steps: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            dropout: 0.3,
            label_smoothing: 0.1,
            lr: 1e-3,
            warmup_steps: 500,
            weight_decay: 1e-4,
            max_tokens: 1280,
            patience: 5,
            finetune_lr_scale: 0.1,
            beam: 5,
            seed: 0,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return bad("label_smoothing must be in [0, 1)");
        }
        if self.beam == 0 {
            return bad("beam must be at least 1");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.finetune_lr_scale >= 0.0) {
            return bad("finetune_lr_scale must be non-negative");
        }
        Ok(())
    }
}

/// A packed training batch. Targets end with EOS.
pub struct Batch<'a, F> {
    pub sources: Vec<&'a [usize]>,
    pub targets: Vec<&'a [usize]>,
    /// Precomputed embedder states, required in frozen mode.
    pub hidden: Option<Vec<&'a Array2<F>>>,
}

/// Parameter ids of a corrector inside a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Corrector {
    pub config: CorrectorConfig,
    pub vocab_size: usize,
    tokens: ParamId,
    positions: ParamId,
    adapter: Option<LinearParams>,
    encoder: Vec<EncoderLayerParams>,
    decoder: Vec<DecoderLayerParams>,
    output: LinearParams,
    /// Present when fine-tuning; its weights live in the same store.
    embedder: Option<Embedder>,
}

/// Per-decoder-layer keys and values of the encoder output.
#[derive(Debug, Clone)]
pub struct Encoded<F> {
    cross: Vec<(Array2<F>, Array2<F>)>,
}

/// Self-attention keys and values of the tokens decoded so far.
#[derive(Debug, Clone)]
pub struct DecoderCache<F> {
    layers: Vec<(Array2<F>, Array2<F>)>,
    pos: usize,
}

impl Corrector {
    /// Add corrector parameters to `store`. `embedder_width` is the width
    /// of the embedder states (ignored in `None` mode); `embedder` must be
    /// given, with its weights already in `store`, when fine-tuning.
    pub fn new<F: Real, R: Rng + ?Sized>(
        config: CorrectorConfig,
        vocab_size: usize,
        embedder_width: usize,
        embedder: Option<&Embedder>,
        store: &mut ParamStore<F>,
        rng: &mut R,
    ) -> Corrector {
        let d = config.d_model;
        let std = 1.0 / (d as f64).sqrt();
        let tokens = store.normal("corrector.tokens", vocab_size, d, std, rng);
        let positions = store.sinusoidal("corrector.positions", config.max_len, d);
        let adapter = (config.embedder_mode != EmbedderMode::None)
            .then(|| LinearParams::new(store, "corrector.adapter", embedder_width, d, rng));
        let encoder = (0..config.encoder_layers)
            .map(|i| {
                EncoderLayerParams::new(
                    store,
                    &format!("corrector.encoder{i}"),
                    d,
                    config.heads,
                    config.d_ff,
                    Activation::Relu,
                    rng,
                )
            })
            .collect();
        let decoder = (0..config.decoder_layers)
            .map(|i| {
                DecoderLayerParams::new(
                    store,
                    &format!("corrector.decoder{i}"),
                    d,
                    config.heads,
                    config.d_ff,
                    Activation::Relu,
                    rng,
                )
            })
            .collect();
        let output = LinearParams::new(store, "corrector.output", d, vocab_size, rng);
        let embedder = match config.embedder_mode {
            EmbedderMode::FineTune => Some(embedder.expect("fine-tuning needs the embedder").clone()),
            _ => None,
        };
        Corrector {
            config,
            vocab_size,
            tokens,
            positions,
            adapter,
            encoder,
            decoder,
            output,
            embedder,
        }
    }

    /// Embeddings of packed `ids`, scaled, plus positions.
    fn embed_tokens<F: Real>(&self, t: &mut Tape<F>, s: &ParamStore<F>, seqs: &[&[usize]]) -> NodeId {
        let (ids, pos) = pack(seqs);
        let tok = t.param(s, self.tokens);
        let x = t.gather(tok, &ids);
        let x = t.scale(x, F::lit((self.config.d_model as f64).sqrt()));
        let p = t.param(s, self.positions);
        let p = t.gather(p, &pos);
        t.add(x, p)
    }

    fn source_input<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        sources: &[&[usize]],
        hidden: Option<&[&Array2<F>]>,
        dropout: f64,
        rng: &mut R,
    ) -> Result<NodeId, TrainError> {
        if let Some(len) = sources.iter().map(|s| s.len()).max() {
            if len > self.config.max_len {
                return Err(TrainError::SequenceTooLong {
                    len,
                    max: self.config.max_len,
                });
            }
        }
        let states = match self.config.embedder_mode {
            EmbedderMode::None => return Ok(self.embed_tokens(t, s, sources)),
            EmbedderMode::Frozen => {
                let hidden = hidden.ok_or_else(|| TrainError::Config("frozen mode needs embedder states".into()))?;
                let views: Vec<_> = hidden.iter().map(|h| h.view()).collect();
                let packed = ndarray::concatenate(Axis(0), &views)
                    .map_err(|e| TrainError::Config(format!("embedder states: {e}")))?;
                if packed.nrows() != sources.iter().map(|s| s.len()).sum::<usize>() {
                    return Err(TrainError::Config("embedder states do not match the source lengths".into()));
                }
                t.constant(packed)
            }
            EmbedderMode::FineTune => {
                let emb = self.embedder.as_ref().expect("fine-tuning corrector has an embedder");
                let p = if dropout > 0.0 { FINETUNE_EMBEDDER_DROPOUT } else { 0.0 };
                emb.forward(t, s, sources, p, rng)?
            }
        };
        let adapter = self.adapter.as_ref().expect("adapter present with an embedder");
        Ok(adapter.forward(t, s, states))
    }

    /// Encoder output for packed sources.
    pub fn encode<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        sources: &[&[usize]],
        hidden: Option<&[&Array2<F>]>,
        dropout: f64,
        rng: &mut R,
    ) -> Result<NodeId, TrainError> {
        let x = self.source_input(t, s, sources, hidden, dropout, rng)?;
        let layout = Rc::new(AttnLayout::from_lengths(&lengths(sources)));
        let mut x = t.dropout(x, dropout, rng);
        for layer in &self.encoder {
            x = layer.forward(t, s, x, &layout, dropout, rng);
        }
        Ok(x)
    }

    /// Teacher-forced output logits: row `i` of a target predicts its token
    /// `i` from `BOS` and the tokens before it.
    pub fn decode_logits<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        memory: NodeId,
        sources: &[&[usize]],
        targets: &[&[usize]],
        dropout: f64,
        rng: &mut R,
    ) -> Result<NodeId, TrainError> {
        if let Some(len) = targets.iter().map(|s| s.len()).max() {
            if len > self.config.max_len {
                return Err(TrainError::SequenceTooLong {
                    len,
                    max: self.config.max_len,
                });
            }
        }
        let inputs: Vec<Vec<usize>> = targets
            .iter()
            .map(|tgt| std::iter::once(BOS).chain(tgt[..tgt.len() - 1].iter().copied()).collect())
            .collect();
        let inputs: Vec<&[usize]> = inputs.iter().map(Vec::as_slice).collect();
        let tgt_lens = lengths(targets);
        let self_layout = Rc::new(AttnLayout::from_lengths(&tgt_lens));
        let cross_layout = Rc::new(AttnLayout::cross(&tgt_lens, &lengths(sources)));
        let x = self.embed_tokens(t, s, &inputs);
        let mut x = t.dropout(x, dropout, rng);
        for layer in &self.decoder {
            x = layer.forward(t, s, x, memory, &self_layout, &cross_layout, dropout, rng);
        }
        Ok(self.output.forward(t, s, x))
    }

    /// Mean label-smoothed cross-entropy of a batch.
    pub fn loss<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        batch: &Batch<'_, F>,
        dropout: f64,
        smoothing: f64,
        rng: &mut R,
    ) -> Result<NodeId, TrainError> {
        let memory = self.encode(t, s, &batch.sources, batch.hidden.as_deref(), dropout, rng)?;
        let logits = self.decode_logits(t, s, memory, &batch.sources, &batch.targets, dropout, rng)?;
        let gold: Vec<usize> = batch.targets.iter().flat_map(|t| t.iter().copied()).collect();
        Ok(t.smoothed_cross_entropy(logits, &gold, smoothing))
    }

    /// Encoder output for one source in inference mode.
    pub fn encode_one<F: Real>(
        &self,
        s: &ParamStore<F>,
        source: &[usize],
        hidden: Option<&Array2<F>>,
    ) -> Result<Array2<F>, TrainError> {
        let mut t = Tape::new();
        let mut rng = inference_rng();
        let hidden = hidden.map(|h| vec![h]);
        let m = self.encode(&mut t, s, &[source], hidden.as_deref(), 0.0, &mut rng)?;
        Ok(t.value(m).clone())
    }

    /// Project the encoder output into every decoder layer's cross-attention
    /// keys and values.
    pub fn prepare<F: Real>(&self, s: &ParamStore<F>, memory: &Array2<F>) -> Encoded<F> {
        Encoded {
            cross: self
                .decoder
                .iter()
                .map(|l| {
                    (
                        l.cross_attn.k.infer(s, memory.view()),
                        l.cross_attn.v.infer(s, memory.view()),
                    )
                })
                .collect(),
        }
    }

    pub fn start_cache<F: Real>(&self) -> DecoderCache<F> {
        let d = self.config.d_model;
        DecoderCache {
            layers: self
                .decoder
                .iter()
                .map(|_| (Array2::zeros((0, d)), Array2::zeros((0, d))))
                .collect(),
            pos: 0,
        }
    }

    /// Feed one decoder input token; returns the `1 × V` logits of the next
    /// token.
    pub fn step<F: Real>(
        &self,
        s: &ParamStore<F>,
        enc: &Encoded<F>,
        cache: &mut DecoderCache<F>,
        token: usize,
    ) -> Array2<F> {
        assert!(cache.pos < self.config.max_len, "decoder position past max_len");
        let scale = F::lit((self.config.d_model as f64).sqrt());
        let row = &s.get(self.tokens).row(token) * scale + s.get(self.positions).row(cache.pos);
        let mut x = row.insert_axis(Axis(0));
        for (layer, ((keys, values), (mk, mv))) in self.decoder.iter().zip(cache.layers.iter_mut().zip(&enc.cross)) {
            let sa = &layer.self_attn;
            keys.push_row(sa.k.infer(s, x.view()).row(0)).expect("width matches");
            values.push_row(sa.v.infer(s, x.view()).row(0)).expect("width matches");
            let a = sa.infer_with_kv(s, x.view(), keys.view(), values.view(), false);
            x = layer.norm1.infer(s, (&x + &a).view());
            let c = layer.cross_attn.infer_with_kv(s, x.view(), mk.view(), mv.view(), false);
            x = layer.norm2.infer(s, (&x + &c).view());
            let f = layer.ffn.infer(s, x.view());
            x = layer.norm3.infer(s, (&x + &f).view());
        }
        cache.pos += 1;
        self.output.infer(s, x.view())
    }
}

/// Random stream for inference calls; with zero dropout nothing is drawn.
fn inference_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

fn lengths(seqs: &[&[usize]]) -> Vec<usize> {
    seqs.iter().map(|s| s.len()).collect()
}

/// Log-softmax of a logit row, in `f64`.
fn log_softmax<F: Real>(logits: &Array2<F>) -> Vec<f64> {
    let z: Vec<f64> = logits.iter().map(|x| x.to_f64().expect("finite logit")).collect();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = z.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
    z.iter().map(|x| x - lse).collect()
}

/// A trained corrector bound to one source sentence.
pub struct CorrectorScorer<'a, F> {
    model: &'a Corrector,
    params: &'a ParamStore<F>,
    encoded: Encoded<F>,
}

impl<'a, F: Real> CorrectorScorer<'a, F> {
    pub fn new(model: &'a Corrector, params: &'a ParamStore<F>, memory: &Array2<F>) -> Self {
        CorrectorScorer {
            model,
            params,
            encoded: model.prepare(params, memory),
        }
    }
}

impl<F: Real> StepScorer for CorrectorScorer<'_, F> {
    type State = DecoderCache<F>;

    fn start(&self) -> DecoderCache<F> {
        self.model.start_cache()
    }

    fn step(&self, state: &mut DecoderCache<F>, token: usize) -> Vec<f64> {
        log_softmax(&self.model.step(self.params, &self.encoded, state, token))
    }

    fn bos(&self) -> usize {
        BOS
    }

    fn eos(&self) -> usize {
        EOS
    }
}

/// One corrected sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub source: String,
    pub output: String,
    /// Length-normalized log-probability of the output.
    pub score: f64,
    /// Decoding hit the length limit before EOS.
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointConfig {
    corrector: CorrectorConfig,
    embedder: Option<EmbedderConfig>,
}

/// A corrector with its vocabulary, weights and, in frozen mode, the
/// embedder it reads.
#[derive(Debug, Clone)]
pub struct CorrectorArtifact {
    pub vocab: Vocab,
    pub model: Corrector,
    pub params: ParamStore<f32>,
    /// The external embedder (frozen mode only).
    pub embedder: Option<EmbedderArtifact>,
    embedder_config: Option<EmbedderConfig>,
    /// Digest of the embedder checkpoint the corrector was trained with.
    pub embedder_digest: Option<String>,
}

impl CorrectorArtifact {
    /// Fresh weights. Frozen and fine-tune modes need `embedder`; its
    /// vocabulary becomes the corrector's.
    pub fn new(
        config: CorrectorConfig,
        vocab: Vocab,
        embedder: Option<&EmbedderArtifact>,
        seed: u64,
        finetune_lr_scale: f64,
    ) -> Result<CorrectorArtifact, TrainError> {
        if config.embedder_mode != EmbedderMode::None {
            let e = embedder.ok_or_else(|| TrainError::Config(format!("embedder mode {} needs an embedder", config.embedder_mode)))?;
            if e.vocab != vocab {
                return Err(TrainError::Config("corrector and embedder vocabularies differ".into()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut params, width, emb_model) = match (config.embedder_mode, embedder) {
            (EmbedderMode::FineTune, Some(e)) => {
                let mut p = e.params.clone();
                for id in p.ids().collect::<Vec<_>>() {
                    p.tensor_mut(id).lr_scale = finetune_lr_scale;
                }
                (p, e.model.config.d_model, Some(&e.model))
            }
            (_, e) => (ParamStore::new(), e.map_or(0, |e| e.model.config.d_model), None),
        };
        let model = Corrector::new(config, vocab.len(), width, emb_model, &mut params, &mut rng);
        let external = (config.embedder_mode == EmbedderMode::Frozen).then(|| embedder.cloned()).flatten();
        Ok(CorrectorArtifact {
            vocab,
            model,
            params,
            embedder_digest: embedder
                .filter(|_| config.embedder_mode != EmbedderMode::None)
                .map(|e| e.to_checkpoint().digest()),
            embedder_config: embedder
                .filter(|_| config.embedder_mode != EmbedderMode::None)
                .map(|e| e.model.config),
            embedder: external,
        })
    }

    pub fn sequence(&self, text: &str) -> Vec<usize> {
        sequence(&self.vocab, text)
    }

    /// Frozen-mode embedder states of a source sequence.
    pub fn hidden(&self, source: &[usize]) -> Result<Option<Array2<f32>>, TrainError> {
        match &self.embedder {
            Some(e) if self.model.config.embedder_mode == EmbedderMode::Frozen => {
                Ok(Some(e.model.embed(&e.params, source)?))
            }
            _ => Ok(None),
        }
    }

    /// Encoder output for `text`.
    pub fn encode(&self, text: &str) -> Result<Array2<f32>, TrainError> {
        let src = self.sequence(text);
        let hidden = self.hidden(&src)?;
        self.model.encode_one(&self.params, &src, hidden.as_ref())
    }

    /// Decoding length limit for a source of `source_len` tokens.
    pub fn decode_limit(&self, source_len: usize) -> usize {
        (2 * source_len + 10).min(self.model.config.max_len)
    }

    /// Best hypothesis for `text` under beam search (`beam == 1` is greedy).
    pub fn search(&self, text: &str, beam: usize) -> Result<Hypothesis, TrainError> {
        let memory = self.encode(text)?;
        let scorer = CorrectorScorer::new(&self.model, &self.params, &memory);
        Ok(beam_search(&scorer, beam, self.decode_limit(memory.nrows())))
    }

    /// Normalize, encode, decode and detokenize.
    pub fn correct(&self, text: &str, beam: usize) -> Result<Correction, TrainError> {
        let source = normalize(text);
        if source.trim().is_empty() {
            return Ok(Correction {
                source,
                output: String::new(),
                score: 0.0,
                truncated: false,
            });
        }
        let hyp = self.search(&source, beam)?;
        Ok(Correction {
            output: self.vocab.decode(hyp.content()),
            score: hyp.normalized(),
            truncated: !hyp.finished,
            source,
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let config = CheckpointConfig {
            corrector: self.model.config,
            embedder: self.embedder_config,
        };
        Checkpoint::new(
            CORRECTOR_KIND,
            serde_json::to_value(config).expect("config serializes"),
            self.vocab.symbols().to_vec(),
            named_tensors(&self.params),
            serde_json::json!({ "embedder_digest": self.embedder_digest }),
        )
    }

    /// Rebuild from a checkpoint. Frozen mode needs the embedder it was
    /// trained with; any other embedder is rejected.
    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        embedder: Option<EmbedderArtifact>,
    ) -> Result<CorrectorArtifact, CheckpointError> {
        if ckpt.header.kind != CORRECTOR_KIND {
            return Err(CheckpointError::Mismatch(format!(
                "expected a {CORRECTOR_KIND} checkpoint, found {:?}",
                ckpt.header.kind
            )));
        }
        let config: CheckpointConfig = serde_json::from_value(ckpt.header.config.clone())
            .map_err(|e| CheckpointError::Header(e.to_string()))?;
        let vocab = Vocab::from_symbols(ckpt.header.vocab.clone()).map_err(|e| CheckpointError::Header(e.to_string()))?;
        let digest = ckpt.header.meta.get("embedder_digest").and_then(|v| v.as_str()).map(str::to_string);
        let mode = config.corrector.embedder_mode;
        let template = match mode {
            EmbedderMode::None => None,
            EmbedderMode::Frozen => {
                let e = embedder.ok_or_else(|| {
                    CheckpointError::Mismatch("corrector was trained on a frozen embedder; supply it".into())
                })?;
                if e.vocab != vocab {
                    return Err(CheckpointError::Mismatch("embedder vocabulary differs from the corrector's".into()));
                }
                if Some(e.model.config) != config.embedder {
                    return Err(CheckpointError::Mismatch("embedder dimensions differ from the corrector's".into()));
                }
                let found = e.to_checkpoint().digest();
                if digest.as_deref() != Some(found.as_str()) {
                    return Err(CheckpointError::Mismatch(format!(
                        "embedder digest {found} does not match the one the corrector was trained with ({})",
                        digest.as_deref().unwrap_or("none")
                    )));
                }
                Some(e)
            }
            EmbedderMode::FineTune => {
                let ec = config
                    .embedder
                    .ok_or_else(|| CheckpointError::Header("fine-tuned corrector lacks an embedder config".into()))?;
                Some(EmbedderArtifact::new(ec, vocab.clone(), 0))
            }
        };
        let mut art = CorrectorArtifact::new(config.corrector, vocab, template.as_ref(), 0, 1.0)
            .map_err(|e| CheckpointError::Mismatch(e.to_string()))?;
        load_tensors(&mut art.params, ckpt)?;
        art.embedder_digest = digest;
        Ok(art)
    }
}

/// Everything needed to continue training exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: ParamStore<f32>,
    pub adam: AdamState<f32>,
    pub best: Option<ParamStore<f32>>,
    /// Next epoch to run.
    pub epoch: u64,
    pub best_valid: Option<f64>,
    pub best_epoch: Option<u64>,
    pub bad_epochs: u64,
    pub log: TrainLog,
}

#[derive(Serialize, Deserialize)]
struct StateMeta {
    step: u64,
    epoch: u64,
    best_valid: Option<f64>,
    best_epoch: Option<u64>,
    bad_epochs: u64,
    log: TrainLog,
}

impl TrainState {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut named = Vec::new();
        for (i, t) in self.params.tensors().iter().enumerate() {
            named.push((format!("param/{}", t.name), t.value.clone()));
            named.push((format!("adam.m/{}", t.name), self.adam.m[i].clone()));
            named.push((format!("adam.v/{}", t.name), self.adam.v[i].clone()));
        }
        if let Some(best) = &self.best {
            named.extend(best.tensors().iter().map(|t| (format!("best/{}", t.name), t.value.clone())));
        }
        let meta = StateMeta {
            step: self.adam.step,
            epoch: self.epoch,
            best_valid: self.best_valid,
            best_epoch: self.best_epoch,
            bad_epochs: self.bad_epochs,
            log: self.log.clone(),
        };
        Checkpoint::new(
            TRAIN_STATE_KIND,
            serde_json::Value::Null,
            Vec::new(),
            named,
            serde_json::to_value(meta).expect("meta serializes"),
        )
    }

    /// Restore into the layout of `template` (a freshly built artifact with
    /// the same configuration).
    pub fn from_checkpoint(ckpt: &Checkpoint, template: &ParamStore<f32>) -> Result<TrainState, CheckpointError> {
        if ckpt.header.kind != TRAIN_STATE_KIND {
            return Err(CheckpointError::Mismatch(format!(
                "expected a {TRAIN_STATE_KIND} file, found {:?}",
                ckpt.header.kind
            )));
        }
        let meta: StateMeta =
            serde_json::from_value(ckpt.header.meta.clone()).map_err(|e| CheckpointError::Header(e.to_string()))?;
        let fetch = |prefix: &str, name: &str, shape: (usize, usize)| {
            let key = format!("{prefix}/{name}");
            let t = ckpt
                .get(&key)
                .ok_or_else(|| CheckpointError::Mismatch(format!("training state lacks {key}")))?;
            if t.dim() != shape {
                return Err(CheckpointError::Mismatch(format!("{key} has shape {:?}, expected {shape:?}", t.dim())));
            }
            Ok(t.clone())
        };
        let mut params = template.clone();
        let mut m = Vec::new();
        let mut v = Vec::new();
        let has_best = ckpt.header.tensors.iter().any(|t| t.name.starts_with("best/"));
        let mut best = has_best.then(|| template.clone());
        for id in template.ids() {
            let name = template.tensor(id).name.clone();
            let shape = template.get(id).dim();
            *params.get_mut(id) = fetch("param", &name, shape)?;
            m.push(fetch("adam.m", &name, shape)?);
            v.push(fetch("adam.v", &name, shape)?);
            if let Some(b) = &mut best {
                *b.get_mut(id) = fetch("best", &name, shape)?;
            }
        }
        Ok(TrainState {
            params,
            adam: AdamState { step: meta.step, m, v },
            best,
            epoch: meta.epoch,
            best_valid: meta.best_valid,
            best_epoch: meta.best_epoch,
            bad_epochs: meta.bad_epochs,
            log: meta.log,
        })
    }
}

/// Token sequences of a corpus, skipping pairs too long for the model.
struct TokenizedCorpus {
    sources: Vec<Vec<usize>>,
    targets: Vec<Vec<usize>>,
    hidden: Option<Vec<Array2<f32>>>,
}

impl TokenizedCorpus {
    fn new(corpus: &ParallelCorpus, art: &CorrectorArtifact, max_tokens: usize) -> Result<TokenizedCorpus, TrainError> {
        let max = art.model.config.max_len;
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        let mut skipped = 0;
        for p in &corpus.pairs {
            let s = art.sequence(&p.source);
            let t = art.sequence(&p.target);
            if s.len() > max || t.len() > max {
                skipped += 1;
                continue;
            }
            sources.push(s);
            targets.push(t);
        }
        if skipped > 0 {
            log::warn!("skipped {skipped} {} pairs longer than {max} tokens", corpus.split.name());
        }
        let hidden = match (&art.embedder, art.model.config.embedder_mode) {
            (Some(e), EmbedderMode::Frozen) => {
                let refs: Vec<&[usize]> = sources.iter().map(Vec::as_slice).collect();
                Some(e.model.embed_many(&e.params, &refs, max_tokens.max(max))?)
            }
            _ => None,
        };
        Ok(TokenizedCorpus {
            sources,
            targets,
            hidden,
        })
    }

    fn len(&self) -> usize {
        self.sources.len()
    }

    fn batch(&self, idx: &[usize]) -> Batch<'_, f32> {
        Batch {
            sources: idx.iter().map(|&i| self.sources[i].as_slice()).collect(),
            targets: idx.iter().map(|&i| self.targets[i].as_slice()).collect(),
            hidden: self.hidden.as_ref().map(|h| idx.iter().map(|&i| &h[i]).collect()),
        }
    }
}

/// Mean per-token smoothed loss of a data set in inference mode.
fn evaluate(art: &CorrectorArtifact, data: &TokenizedCorpus, config: &TrainConfig) -> Result<Option<f64>, TrainError> {
    if data.len() == 0 {
        return Ok(None);
    }
    let order: Vec<usize> = (0..data.len()).collect();
    let lens: Vec<usize> = data.sources.iter().map(Vec::len).collect();
    let mut total = 0.0;
    let mut tokens = 0usize;
    for idx in token_batches(&order, &lens, config.max_tokens) {
        let batch = data.batch(&idx);
        let n: usize = batch.targets.iter().map(|t| t.len()).sum();
        let mut t = Tape::new();
        let loss = art
            .model
            .loss(&mut t, &art.params, &batch, 0.0, config.label_smoothing, &mut inference_rng())?;
        total += t.scalar(loss) as f64 * n as f64;
        tokens += n;
    }
    Ok(Some(total / tokens as f64))
}

/// Result of [`train_corrector`].
pub struct TrainOutcome {
    /// Weights of the best validation epoch.
    pub artifact: CorrectorArtifact,
    pub log: TrainLog,
    pub best_epoch: Option<u64>,
    /// State after the last epoch run, for resuming.
    pub state: TrainState,
}

/// Train a corrector. `resume` continues from a saved state; `on_epoch`
/// sees the state after every epoch (to persist it).
pub fn train_corrector(
    train: &ParallelCorpus,
    valid: &ParallelCorpus,
    mut artifact: CorrectorArtifact,
    config: &TrainConfig,
    resume: Option<TrainState>,
    on_epoch: &mut dyn FnMut(&TrainState) -> Result<(), TrainError>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let train_data = TokenizedCorpus::new(train, &artifact, config.max_tokens)?;
    if train_data.len() == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let valid_data = TokenizedCorpus::new(valid, &artifact, config.max_tokens)?;
    let lens: Vec<usize> = train_data.sources.iter().map(Vec::len).collect();
    let schedule = LrSchedule {
        peak: config.lr,
        warmup_steps: config.warmup_steps,
    };
    let adam_config = AdamConfig {
        weight_decay: config.weight_decay,
        ..Default::default()
    };
    let mut state = match resume {
        Some(s) => {
            if s.params.len() != artifact.params.len() {
                return Err(TrainError::Config("training state does not match the model".into()));
            }
            artifact.params = s.params.clone();
            s
        }
        None => TrainState {
            params: artifact.params.clone(),
            adam: Adam::new(adam_config, &artifact.params).state,
            best: None,
            epoch: 0,
            best_valid: None,
            best_epoch: None,
            bad_epochs: 0,
            log: TrainLog::default(),
        },
    };
    let mut adam = Adam {
        config: adam_config,
        state: state.adam.clone(),
    };
    let mut out_of_steps = false;
    while state.epoch < config.epochs && !out_of_steps && state.bad_epochs < config.patience.max(1) {
        let epoch = state.epoch;
        let order = epoch_order(train_data.len(), config.seed, epoch);
        let mut sum = 0.0;
        let mut count = 0usize;
        for idx in token_batches(&order, &lens, config.max_tokens) {
            let step = adam.state.step + 1;
            if config.max_steps.is_some_and(|m| step > m) {
                out_of_steps = true;
                break;
            }
            let mut rng = step_rng(config.seed, step);
            let batch = train_data.batch(&idx);
            let mut tape = Tape::new();
            let loss = artifact.model.loss(
                &mut tape,
                &artifact.params,
                &batch,
                config.dropout,
                config.label_smoothing,
                &mut rng,
            )?;
            let value = tape.scalar(loss) as f64;
            check_finite(value, step)?;
            let grads = tape.backward(loss, artifact.params.len());
            drop(tape);
            adam.step(&mut artifact.params, &grads, schedule.at(step));
            if !artifact.params.all_finite() {
                return Err(TrainError::Diverged { step, loss: value });
            }
            sum += value;
            count += 1;
            if step % 200 == 0 {
                log::debug!("epoch {epoch} step {step} loss {:.4}", sum / count as f64);
            }
        }
        if count == 0 {
            break;
        }
        let valid_loss = evaluate(&artifact, &valid_data, config)?;
        state.log.push(LogRow {
            epoch,
            step: adam.state.step,
            train_loss: sum / count as f64,
            valid_loss,
            lr: schedule.at(adam.state.step),
        });
        let improved = match (valid_loss, state.best_valid) {
            (Some(v), Some(b)) => v < b,
            (Some(_), None) => true,
            (None, _) => true,
        };
        if improved {
            state.best_valid = valid_loss;
            state.best_epoch = Some(epoch);
            state.best = Some(artifact.params.clone());
            state.bad_epochs = 0;
        } else {
            state.bad_epochs += 1;
        }
        state.epoch = epoch + 1;
        state.params = artifact.params.clone();
        state.adam = adam.state.clone();
        on_epoch(&state)?;
    }
    if let Some(best) = &state.best {
        artifact.params = best.clone();
    }
    Ok(TrainOutcome {
        artifact,
        log: state.log.clone(),
        best_epoch: state.best_epoch,
        state,
    })
}
