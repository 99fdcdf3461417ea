//! Train a small corrector on generated data and correct a few sentences.
//!
//! A few minutes on one core; the output only starts to look right after
//! several epochs.

use vietspell::config::RunConfig;
use vietspell::corrector::{train_corrector, CorrectorArtifact, CorrectorConfig, EmbedderMode, TrainConfig};
use vietspell::harness;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut run = RunConfig::toy();
    run.corpus.generate = 3000;
    run.corpus.splits.train_count = 2500;
    run.corpus.splits.valid_count = 100;
    run.corpus.splits.test_count = 100;
    let clean = harness::clean_sentences(&run, None)?;
    let [train, valid, test] = harness::build_dataset(&run, clean)?;
    let vocab = harness::build_vocab(&train)?;

    let config = CorrectorConfig {
        embedder_mode: EmbedderMode::None,
        ..Default::default()
    };
    let art = CorrectorArtifact::new(config, vocab, None, 0, 1.0)?;
    let train_config = TrainConfig {
        epochs: 3,
        dropout: 0.1,
        lr: 2e-3,
        ..Default::default()
    };
    let outcome = train_corrector(&train, &valid, art, &train_config, None, &mut |s| {
        let row = s.log.rows.last().expect("one row per epoch");
        println!("epoch {} train {:.3} valid {:.3?}", row.epoch, row.train_loss, row.valid_loss);
        Ok(())
    })?;
    for p in test.pairs.iter().take(5) {
        let c = outcome.artifact.correct(&p.source, 5)?;
        println!("{}\n  -> {}\n  gold {}", p.source, c.output, p.target);
    }
    Ok(())
}
