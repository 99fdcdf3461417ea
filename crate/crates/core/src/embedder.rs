//! Character-level masked-language-model encoder.
//!
//! Trained on clean text to predict masked characters; its last-layer
//! hidden states give the corrector a contextual view of the source.

use std::rc::Rc;

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{
    Activation, Adam, AdamConfig, AttnLayout, Checkpoint, CheckpointError, EncoderLayerParams,
    LayerNormParams, LinearParams, LrSchedule, NodeId, ParamId, ParamStore, Real, Tape,
};
use crate::training::{check_finite, epoch_order, step_rng, token_batches, LogRow, TrainError, TrainLog};
use crate::vocab::{Vocab, EOS, MASK, SPECIALS};

pub const EMBEDDER_KIND: &str = "embedder";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub layers: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            layers: 2,
            d_model: 64,
            heads: 4,
            d_ff: 256,
            max_len: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    /// Fraction of maskable positions selected.
    pub prob: f64,
    /// Of the selected: replaced by MASK ...
    pub mask_frac: f64,
    /// ... or by a random character; the rest stay unchanged.
    pub random_frac: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            prob: 0.15,
            mask_frac: 0.8,
            random_frac: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmConfig {
    pub epochs: u64,
    pub max_tokens: usize,
    pub lr: f64,
    pub warmup_steps: u64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub mask: MaskConfig,
    pub seed: u64,
    /// Stop after this many updates regardless of epochs.
    pub max_steps: Option<u64>,
}

impl Default for MlmConfig {
    fn default() -> Self {
        MlmConfig {
            epochs: 3,
            max_tokens: 1280,
            lr: 1e-3,
            warmup_steps: 500,
            weight_decay: 1e-4,
            dropout: 0.1,
            mask: MaskConfig::default(),
            seed: 0,
            max_steps: None,
        }
    }
}

/// Parameter ids of an embedder inside a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    pub config: EmbedderConfig,
    pub vocab_size: usize,
    tokens: ParamId,
    positions: ParamId,
    segment: ParamId,
    norm: LayerNormParams,
    layers: Vec<EncoderLayerParams>,
    head: LinearParams,
}

/// Token ids followed by EOS: the unit every model consumes.
pub fn sequence(vocab: &Vocab, text: &str) -> Vec<usize> {
    let mut ids = vocab.encode(text);
    ids.push(EOS);
    ids
}

/// Concatenate sequences; return packed ids and positions.
pub(crate) fn pack(seqs: &[&[usize]]) -> (Vec<usize>, Vec<usize>) {
    let mut ids = Vec::new();
    let mut pos = Vec::new();
    for s in seqs {
        ids.extend_from_slice(s);
        pos.extend(0..s.len());
    }
    (ids, pos)
}

impl Embedder {
    pub fn new<F: Real, R: Rng + ?Sized>(
        config: EmbedderConfig,
        vocab_size: usize,
        store: &mut ParamStore<F>,
        rng: &mut R,
    ) -> Embedder {
        let d = config.d_model;
        let std = 1.0 / (d as f64).sqrt();
        Embedder {
            config,
            vocab_size,
            tokens: store.normal("embedder.tokens", vocab_size, d, std, rng),
            positions: store.sinusoidal("embedder.positions", config.max_len, d),
            segment: store.normal("embedder.segment", 1, d, std, rng),
            norm: LayerNormParams::new(store, "embedder.norm", d),
            layers: (0..config.layers)
                .map(|i| {
                    EncoderLayerParams::new(
                        store,
                        &format!("embedder.layer{i}"),
                        d,
                        config.heads,
                        config.d_ff,
                        Activation::Gelu,
                        rng,
                    )
                })
                .collect(),
            head: LinearParams::new(store, "embedder.mlm", d, vocab_size, rng),
        }
    }

    fn check_len(&self, seqs: &[&[usize]]) -> Result<(), TrainError> {
        match seqs.iter().map(|s| s.len()).max() {
            Some(len) if len > self.config.max_len => Err(TrainError::SequenceTooLong {
                len,
                max: self.config.max_len,
            }),
            _ => Ok(()),
        }
    }

    /// Last-layer hidden states of the packed sequences.
    pub fn forward<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        seqs: &[&[usize]],
        dropout: f64,
        rng: &mut R,
    ) -> Result<NodeId, TrainError> {
        self.check_len(seqs)?;
        let (ids, pos) = pack(seqs);
        let layout = Rc::new(AttnLayout::from_lengths(&seqs.iter().map(|s| s.len()).collect::<Vec<_>>()));
        let tok = t.param(s, self.tokens);
        let x = t.gather(tok, &ids);
        let x = t.scale(x, F::lit((self.config.d_model as f64).sqrt()));
        let p = t.param(s, self.positions);
        let p = t.gather(p, &pos);
        let x = t.add(x, p);
        let seg = t.param(s, self.segment);
        let x = t.add_row(x, seg);
        let x = self.norm.forward(t, s, x);
        let mut x = t.dropout(x, dropout, rng);
        for layer in &self.layers {
            x = layer.forward(t, s, x, &layout, dropout, rng);
        }
        Ok(x)
    }

    /// Masked-token cross-entropy at packed rows `targets`.
    #[allow(clippy::too_many_arguments)]
    pub fn mlm_loss<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        masked: &[&[usize]],
        targets: &[(usize, usize)],
        dropout: f64,
        rng: &mut R,
    ) -> Result<NodeId, TrainError> {
        let h = self.forward(t, s, masked, dropout, rng)?;
        let rows: Vec<usize> = targets.iter().map(|&(r, _)| r).collect();
        let ids: Vec<usize> = targets.iter().map(|&(_, id)| id).collect();
        let picked = t.gather(h, &rows);
        let logits = self.head.forward(t, s, picked);
        Ok(t.smoothed_cross_entropy(logits, &ids, 0.0))
    }

    /// Hidden states for one sequence in inference mode.
    pub fn embed<F: Real>(&self, s: &ParamStore<F>, ids: &[usize]) -> Result<Array2<F>, TrainError> {
        let mut t = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = self.forward(&mut t, s, &[ids], 0.0, &mut rng)?;
        Ok(t.value(h).clone())
    }

    /// Hidden states for many sequences, split per sequence.
    pub fn embed_many<F: Real>(
        &self,
        s: &ParamStore<F>,
        seqs: &[&[usize]],
        max_tokens: usize,
    ) -> Result<Vec<Array2<F>>, TrainError> {
        let lengths: Vec<usize> = seqs.iter().map(|s| s.len()).collect();
        let order: Vec<usize> = (0..seqs.len()).collect();
        let mut out: Vec<Option<Array2<F>>> = vec![None; seqs.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for batch in token_batches(&order, &lengths, max_tokens) {
            let group: Vec<&[usize]> = batch.iter().map(|&i| seqs[i]).collect();
            let mut t = Tape::new();
            let h = self.forward(&mut t, s, &group, 0.0, &mut rng)?;
            let h = t.value(h);
            let mut off = 0;
            for &i in &batch {
                out[i] = Some(h.slice(s![off..off + lengths[i], ..]).to_owned());
                off += lengths[i];
            }
        }
        Ok(out.into_iter().map(|h| h.expect("every sequence embedded")).collect())
    }
}

/// Select and corrupt positions for masked-LM training. Specials are never
/// selected. Returns the corrupted sequences and `(packed row, original id)`
/// for each selected position.
pub fn mask_batch<R: Rng + ?Sized>(
    seqs: &[&[usize]],
    vocab_size: usize,
    config: &MaskConfig,
    rng: &mut R,
) -> (Vec<Vec<usize>>, Vec<(usize, usize)>) {
    let mut out = Vec::with_capacity(seqs.len());
    let mut targets = Vec::new();
    let mut row = 0;
    for seq in seqs {
        let mut masked = seq.to_vec();
        for (i, &id) in seq.iter().enumerate() {
            if id >= SPECIALS.len() && rng.gen::<f64>() < config.prob {
                targets.push((row + i, id));
                let u = rng.gen::<f64>();
                if u < config.mask_frac {
                    masked[i] = MASK;
                } else if u < config.mask_frac + config.random_frac && vocab_size > SPECIALS.len() {
                    masked[i] = rng.gen_range(SPECIALS.len()..vocab_size);
                }
            }
        }
        row += seq.len();
        out.push(masked);
    }
    (out, targets)
}

/// A trained embedder with its vocabulary and weights.
#[derive(Debug, Clone)]
pub struct EmbedderArtifact {
    pub vocab: Vocab,
    pub model: Embedder,
    pub params: ParamStore<f32>,
}

impl EmbedderArtifact {
    pub fn new(config: EmbedderConfig, vocab: Vocab, seed: u64) -> EmbedderArtifact {
        let mut params = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Embedder::new(config, vocab.len(), &mut params, &mut rng);
        EmbedderArtifact { vocab, model, params }
    }

    pub fn sequence(&self, text: &str) -> Vec<usize> {
        sequence(&self.vocab, text)
    }

    pub fn embed(&self, text: &str) -> Result<Array2<f32>, TrainError> {
        self.model.embed(&self.params, &self.sequence(text))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            EMBEDDER_KIND,
            serde_json::to_value(self.model.config).expect("config serializes"),
            self.vocab.symbols().to_vec(),
            named_tensors(&self.params),
            serde_json::Value::Null,
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<EmbedderArtifact, CheckpointError> {
        if ckpt.header.kind != EMBEDDER_KIND {
            return Err(CheckpointError::Mismatch(format!(
                "expected an {EMBEDDER_KIND} checkpoint, found {:?}",
                ckpt.header.kind
            )));
        }
        let config: EmbedderConfig = serde_json::from_value(ckpt.header.config.clone())
            .map_err(|e| CheckpointError::Header(e.to_string()))?;
        let vocab = Vocab::from_symbols(ckpt.header.vocab.clone())
            .map_err(|e| CheckpointError::Header(e.to_string()))?;
        let mut art = EmbedderArtifact::new(config, vocab, 0);
        load_tensors(&mut art.params, ckpt)?;
        Ok(art)
    }
}

pub(crate) fn named_tensors(store: &ParamStore<f32>) -> Vec<(String, Array2<f32>)> {
    store
        .tensors()
        .iter()
        .map(|t| (t.name.clone(), t.value.clone()))
        .collect()
}

/// Overwrite every tensor of `store` from the checkpoint, by name.
pub(crate) fn load_tensors(store: &mut ParamStore<f32>, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    if ckpt.header.tensors.len() != store.len() {
        return Err(CheckpointError::Mismatch(format!(
            "checkpoint has {} tensors, model expects {}",
            ckpt.header.tensors.len(),
            store.len()
        )));
    }
    for id in store.ids().collect::<Vec<_>>() {
        let name = store.tensor(id).name.clone();
        let src = ckpt
            .get(&name)
            .ok_or_else(|| CheckpointError::Mismatch(format!("tensor {name} missing")))?;
        if src.dim() != store.get(id).dim() {
            return Err(CheckpointError::Mismatch(format!(
                "tensor {name} has shape {:?}, model expects {:?}",
                src.dim(),
                store.get(id).dim()
            )));
        }
        store.get_mut(id).assign(src);
    }
    Ok(())
}

/// Train the embedder on clean sentences.
pub fn train_mlm<S: AsRef<str>>(
    sentences: &[S],
    vocab: Vocab,
    config: EmbedderConfig,
    train: &MlmConfig,
) -> Result<(EmbedderArtifact, TrainLog), TrainError> {
    let mut art = EmbedderArtifact::new(config, vocab, train.seed);
    let seqs: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| art.sequence(s.as_ref()))
        .filter(|s| s.len() <= config.max_len)
        .collect();
    if seqs.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let lengths: Vec<usize> = seqs.iter().map(Vec::len).collect();
    let schedule = LrSchedule {
        peak: train.lr,
        warmup_steps: train.warmup_steps,
    };
    let mut adam = Adam::new(
        AdamConfig {
            weight_decay: train.weight_decay,
            ..Default::default()
        },
        &art.params,
    );
    let mut log = TrainLog::default();
    let mut out_of_steps = false;
    for epoch in 0..train.epochs {
        let order = epoch_order(seqs.len(), train.seed, epoch);
        let mut sum = 0.0;
        let mut count = 0usize;
        for batch in token_batches(&order, &lengths, train.max_tokens) {
            let step = adam.state.step + 1;
            if train.max_steps.is_some_and(|m| step > m) {
                out_of_steps = true;
                break;
            }
            let mut rng = step_rng(train.seed, step);
            let group: Vec<&[usize]> = batch.iter().map(|&i| seqs[i].as_slice()).collect();
            let (masked, targets) = mask_batch(&group, art.vocab.len(), &train.mask, &mut rng);
            if targets.is_empty() {
                continue;
            }
            let masked_refs: Vec<&[usize]> = masked.iter().map(Vec::as_slice).collect();
            let mut tape = Tape::new();
            let loss = art
                .model
                .mlm_loss(&mut tape, &art.params, &masked_refs, &targets, train.dropout, &mut rng)?;
            let value = tape.scalar(loss) as f64;
            check_finite(value, step)?;
            let grads = tape.backward(loss, art.params.len());
            let lr = schedule.at(step);
            adam.step(&mut art.params, &grads, lr);
            if !art.params.all_finite() {
                return Err(TrainError::Diverged { step, loss: value });
            }
            sum += value;
            count += 1;
            if step % 100 == 0 {
                log.push(LogRow {
                    epoch,
                    step,
                    train_loss: sum / count as f64,
                    valid_loss: None,
                    lr,
                });
            }
        }
        if count > 0 {
            log.push(LogRow {
                epoch,
                step: adam.state.step,
                train_loss: sum / count as f64,
                valid_loss: None,
                lr: schedule.at(adam.state.step),
            });
        }
        if out_of_steps {
            break;
        }
    }
    Ok((art, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masking_rates() {
        let seq: Vec<usize> = (0..10_000).map(|i| 5 + i % 20).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (_, targets) = mask_batch(&[&seq], 25, &MaskConfig::default(), &mut rng);
        let frac = targets.len() as f64 / 10_000.0;
        assert!((frac - 0.15).abs() < 0.01, "{frac}");

        let none = MaskConfig {
            prob: 0.0,
            ..Default::default()
        };
        let (out, t) = mask_batch(&[&seq], 25, &none, &mut rng);
        assert_eq!(out[0], seq);
        assert!(t.is_empty());

        let all = MaskConfig {
            prob: 1.0,
            mask_frac: 1.0,
            random_frac: 0.0,
        };
        let with_eos: Vec<usize> = vec![7, 8, 9, EOS];
        let (out, t) = mask_batch(&[&with_eos], 25, &all, &mut rng);
        assert_eq!(out[0], vec![MASK, MASK, MASK, EOS]);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn embed_shape_and_determinism() {
        let vocab = Vocab::build(&["xin chào"]).unwrap();
        let art = EmbedderArtifact::new(
            EmbedderConfig {
                d_model: 16,
                d_ff: 32,
                heads: 2,
                ..Default::default()
            },
            vocab,
            1,
        );
        let h = art.embed("chào").unwrap();
        assert_eq!(h.dim(), (5, 16));
        assert_eq!(h, art.embed("chào").unwrap());
        let long = "a".repeat(300);
        assert!(matches!(art.embed(&long), Err(TrainError::SequenceTooLong { .. })));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let vocab = Vocab::build(&["ab"]).unwrap();
        let art = EmbedderArtifact::new(
            EmbedderConfig {
                d_model: 8,
                d_ff: 8,
                heads: 2,
                layers: 1,
                max_len: 16,
            },
            vocab,
            3,
        );
        let back = EmbedderArtifact::from_checkpoint(&art.to_checkpoint()).unwrap();
        assert_eq!(back.params, art.params);
        assert_eq!(back.vocab, art.vocab);
    }
}
