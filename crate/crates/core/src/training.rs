//! Shared training-loop plumbing: token-budget batching, seeded shuffles
//! and dropout streams, and the TSV training log.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::errorgen::splitmix64;
use crate::nn::CheckpointError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error("sequence of length {len} exceeds the model maximum {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Example order for an epoch, a pure function of `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(epoch ^ 0x5eed)));
    order.shuffle(&mut rng);
    order
}

/// Dropout/masking stream for one optimizer step.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed.rotate_left(17) ^ splitmix64(step)))
}

/// Group examples (in `order`) into batches of at most `max_tokens`
/// tokens by `lengths`; an example longer than the budget gets its own
/// batch.
pub fn token_batches(order: &[usize], lengths: &[usize], max_tokens: usize) -> Vec<Vec<usize>> {
    let mut batches = Vec::new();
    let mut cur = Vec::new();
    let mut tokens = 0;
    for &i in order {
        let l = lengths[i];
        if !cur.is_empty() && tokens + l > max_tokens {
            batches.push(std::mem::take(&mut cur));
            tokens = 0;
        }
        cur.push(i);
        tokens += l;
    }
    if !cur.is_empty() {
        batches.push(cur);
    }
    batches
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: u64,
    pub step: u64,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn push(&mut self, row: LogRow) {
        log::info!(
            "epoch {} step {} train {:.4} valid {} lr {:.2e}",
            row.epoch,
            row.step,
            row.train_loss,
            row.valid_loss.map_or("-".into(), |v| format!("{v:.4}")),
            row.lr
        );
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("epoch\tstep\ttrain_loss\tvalid_loss\tlr\n");
        for r in &self.rows {
            let valid = r.valid_loss.map_or(String::new(), |v| format!("{v:.6}"));
            let _ = writeln!(s, "{}\t{}\t{:.6}\t{}\t{:.6e}", r.epoch, r.step, r.train_loss, valid, r.lr);
        }
        s
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_tsv())
    }
}

pub(crate) fn check_finite(loss: f64, step: u64) -> Result<(), TrainError> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(TrainError::Diverged { step, loss })
    }
}
