//! Finite-difference checks of the analytic gradients in float64.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vietspell::corrector::{Batch, Corrector, CorrectorConfig, EmbedderMode};
use vietspell::embedder::{Embedder, EmbedderConfig};
use vietspell::nn::{NodeId, ParamId, ParamStore, Tape};
use vietspell::vocab::MASK;

const VOCAB: usize = 24;
pub const SAMPLES_PER_KIND: usize = 20;
const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// Entries checked per tensor kind and the worst relative error seen.
#[derive(Debug)]
pub struct GradReport {
    pub checked: BTreeMap<String, usize>,
    pub worst: f64,
}

/// Tensor kind: the parameter name with layer indices removed, so
/// `corrector.encoder0.ffn.fc1.weight` and `corrector.encoder1.ffn.fc1.weight`
/// are sampled together.
fn kind(name: &str) -> String {
    name.chars().filter(|c| !c.is_ascii_digit()).collect()
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-9 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Jiggle every parameter so biases and norms are off their symmetric
/// init.
fn perturb(store: &mut ParamStore<f64>, rng: &mut ChaCha8Rng) {
    for id in store.ids().collect::<Vec<_>>() {
        store.get_mut(id).mapv_inplace(|x| x + rng.gen_range(-0.1..0.1));
    }
}

/// Compare analytic and central-difference gradients on
/// `SAMPLES_PER_KIND` random entries of every tensor kind.
fn check<L>(store: &mut ParamStore<f64>, loss: L, seed: u64) -> Result<GradReport, String>
where
    L: Fn(&mut Tape<f64>, &ParamStore<f64>) -> NodeId,
{
    let mut tape = Tape::new();
    let root = loss(&mut tape, store);
    let grads = tape.backward(root, store.len());

    let mut by_kind: BTreeMap<String, Vec<(ParamId, usize, usize)>> = BTreeMap::new();
    for id in store.ids() {
        let t = store.tensor(id);
        let (rows, cols) = t.value.dim();
        let entries = by_kind.entry(kind(&t.name)).or_default();
        for r in 0..rows {
            for c in 0..cols {
                entries.push((id, r, c));
            }
        }
    }

    let eval = |store: &ParamStore<f64>| {
        let mut tape = Tape::new();
        let root = loss(&mut tape, store);
        tape.scalar(root)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = BTreeMap::new();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (kind, mut entries) in by_kind {
        entries.shuffle(&mut rng);
        entries.truncate(SAMPLES_PER_KIND);
        for &(id, r, c) in &entries {
            let analytic = grads[id.0].as_ref().map_or(0.0, |g: &Array2<f64>| g[[r, c]]);
            let orig = store.get(id)[[r, c]];
            store.get_mut(id)[[r, c]] = orig + STEP;
            let up = eval(store);
            store.get_mut(id)[[r, c]] = orig - STEP;
            let down = eval(store);
            store.get_mut(id)[[r, c]] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let err = relative_error(analytic, numeric);
            worst = worst.max(err);
            if err >= TOLERANCE {
                failures.push(format!("{kind}[{r},{c}]: analytic {analytic:e} numeric {numeric:e} rel {err:e}"));
            }
        }
        if entries.len() < SAMPLES_PER_KIND {
            failures.push(format!("{kind}: only {} entries", entries.len()));
        }
        checked.insert(kind, entries.len());
    }
    if failures.is_empty() {
        Ok(GradReport { checked, worst })
    } else {
        Err(failures.join("\n"))
    }
}

fn small_embedder() -> EmbedderConfig {
    EmbedderConfig {
        layers: 2,
        d_model: 20,
        heads: 4,
        d_ff: 24,
        max_len: 12,
    }
}

fn sources() -> Vec<Vec<usize>> {
    vec![
        vec![5, 16, 7, 18, 9, 10, 23, 6, 2],
        vec![7, 21, 9, 2],
        vec![10, 19, 8, 17, 6, 15, 12, 7, 22, 9, 20, 2],
    ]
}

/// Masked-LM loss of a two-layer embedder.
pub fn embedder_mlm() -> Result<GradReport, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut store = ParamStore::<f64>::new();
    let model = Embedder::new(small_embedder(), VOCAB, &mut store, &mut rng);
    perturb(&mut store, &mut rng);

    let seqs = sources();
    let mut masked = seqs.clone();
    masked[0][2] = MASK;
    masked[2][4] = MASK;
    masked[2][9] = 6;
    let offset = seqs[0].len() + seqs[1].len();
    let targets = vec![(2, seqs[0][2]), (offset + 4, seqs[2][4]), (offset + 9, seqs[2][9])];
    let masked: Vec<&[usize]> = masked.iter().map(Vec::as_slice).collect();

    check(
        &mut store,
        |t, s| {
            model
                .mlm_loss(t, s, &masked, &targets, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
                .expect("loss")
        },
        11,
    )
}

/// Label-smoothed loss of a 2+2 layer corrector in the given mode.
pub fn corrector(mode: EmbedderMode) -> Result<GradReport, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut store = ParamStore::<f64>::new();
    let emb_config = small_embedder();
    let embedder = (mode == EmbedderMode::FineTune).then(|| Embedder::new(emb_config, VOCAB, &mut store, &mut rng));
    let config = CorrectorConfig {
        encoder_layers: 2,
        decoder_layers: 2,
        d_model: 20,
        heads: 4,
        d_ff: 24,
        max_len: 12,
        embedder_mode: mode,
    };
    let model = Corrector::new(config, VOCAB, emb_config.d_model, embedder.as_ref(), &mut store, &mut rng);
    perturb(&mut store, &mut rng);

    let sources = sources();
    let targets = vec![
        vec![5, 16, 7, 9, 10, 23, 6, 2],
        vec![7, 21, 8, 2],
        vec![10, 19, 8, 17, 6, 13, 7, 22, 20, 2],
    ];
    let hidden: Vec<Array2<f64>> = sources
        .iter()
        .map(|s| Array2::from_shape_fn((s.len(), emb_config.d_model), |(r, c)| ((r * 7 + c * 3 + s[0]) as f64).sin()))
        .collect();
    let batch = Batch {
        sources: sources.iter().map(Vec::as_slice).collect(),
        targets: targets.iter().map(Vec::as_slice).collect(),
        hidden: (mode == EmbedderMode::Frozen).then(|| hidden.iter().collect()),
    };
    check(
        &mut store,
        |t, s| {
            model
                .loss(t, s, &batch, 0.0, 0.1, &mut ChaCha8Rng::seed_from_u64(0))
                .expect("loss")
        },
        12,
    )
}
