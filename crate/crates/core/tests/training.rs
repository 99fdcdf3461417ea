use vietspell::config::RunConfig;
use vietspell::corpus::ParallelCorpus;
use vietspell::corrector::{
    train_corrector, CorrectorArtifact, CorrectorConfig, EmbedderMode, TrainConfig, TrainState,
};
use vietspell::embedder::{train_mlm, EmbedderArtifact, EmbedderConfig, MlmConfig};
use vietspell::harness;
use vietspell::nn::Checkpoint;
use vietspell::vocab::Vocab;

fn small_dataset() -> ([ParallelCorpus; 3], Vocab) {
    let mut config = RunConfig::toy();
    config.corpus.generate = 300;
    config.corpus.splits.train_count = 200;
    config.corpus.splits.valid_count = 20;
    config.corpus.splits.test_count = 20;
    config.corpus.max_words = 10;
    let clean = harness::clean_sentences(&config, None).unwrap();
    let data = harness::build_dataset(&config, clean).unwrap();
    let vocab = harness::build_vocab(&data[0]).unwrap();
    (data, vocab)
}

fn small_corrector(mode: EmbedderMode) -> CorrectorConfig {
    CorrectorConfig {
        d_model: 32,
        d_ff: 64,
        embedder_mode: mode,
        ..Default::default()
    }
}

fn train_config(epochs: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        warmup_steps: 10,
        lr: 2e-3,
        dropout: 0.1,
        ..Default::default()
    }
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let (data, vocab) = small_dataset();
    let [train, valid, _] = &data;
    let fresh = || CorrectorArtifact::new(small_corrector(EmbedderMode::None), vocab.clone(), None, 3, 1.0).unwrap();

    let straight = train_corrector(train, valid, fresh(), &train_config(3), None, &mut |_| Ok(())).unwrap();

    let mut saved = None;
    let first = train_corrector(train, valid, fresh(), &train_config(1), None, &mut |s| {
        saved = Some(s.to_checkpoint().to_bytes());
        Ok(())
    })
    .unwrap();
    assert_eq!(first.state.epoch, 1);
    let template = fresh();
    let state = TrainState::from_checkpoint(&Checkpoint::from_bytes(&saved.unwrap()).unwrap(), &template.params).unwrap();
    let resumed = train_corrector(train, valid, template, &train_config(3), Some(state), &mut |_| Ok(())).unwrap();

    assert_eq!(resumed.log.rows, straight.log.rows);
    assert_eq!(resumed.state.adam.step, straight.state.adam.step);
    assert_eq!(resumed.best_epoch, straight.best_epoch);
    let a = resumed.artifact.to_checkpoint();
    let b = straight.artifact.to_checkpoint();
    assert_eq!(a.to_bytes(), b.to_bytes(), "best weights differ after resuming");
}

#[test]
fn ablation_differs_only_by_the_adapter() {
    let (_, vocab) = small_dataset();
    let emb_config = EmbedderConfig {
        d_model: 24,
        d_ff: 48,
        ..Default::default()
    };
    let embedder = EmbedderArtifact::new(emb_config, vocab.clone(), 0);
    let plain = CorrectorArtifact::new(small_corrector(EmbedderMode::None), vocab.clone(), None, 0, 1.0).unwrap();
    let frozen =
        CorrectorArtifact::new(small_corrector(EmbedderMode::Frozen), vocab.clone(), Some(&embedder), 0, 1.0).unwrap();
    let tuned =
        CorrectorArtifact::new(small_corrector(EmbedderMode::FineTune), vocab, Some(&embedder), 0, 0.1).unwrap();

    let adapter = emb_config.d_model * 32 + 32;
    assert_eq!(frozen.params.size(), plain.params.size() + adapter);
    assert_eq!(tuned.params.size(), frozen.params.size() + embedder.params.size());
    let names = |a: &CorrectorArtifact| -> Vec<String> {
        a.params
            .tensors()
            .iter()
            .map(|t| t.name.clone())
            .filter(|n| n.starts_with("corrector.") && !n.starts_with("corrector.adapter"))
            .collect()
    };
    assert_eq!(names(&plain), names(&frozen));
    assert_eq!(names(&plain), names(&tuned));
}

#[test]
fn inference_is_repeatable() {
    let (data, vocab) = small_dataset();
    let [train, _, test] = &data;
    let texts: Vec<&str> = train.targets().collect();
    let mlm = MlmConfig {
        epochs: 1,
        max_steps: Some(5),
        ..Default::default()
    };
    let emb_config = EmbedderConfig {
        d_model: 24,
        d_ff: 48,
        ..Default::default()
    };
    let (embedder, log) = train_mlm(&texts, vocab.clone(), emb_config, &mlm).unwrap();
    assert!(!log.rows.is_empty());
    let art = CorrectorArtifact::new(small_corrector(EmbedderMode::Frozen), vocab, Some(&embedder), 1, 1.0).unwrap();
    for p in test.pairs.iter().take(5) {
        assert_eq!(embedder.embed(&p.source).unwrap(), embedder.embed(&p.source).unwrap());
        let a = art.correct(&p.source, 3).unwrap();
        let b = art.correct(&p.source, 3).unwrap();
        assert_eq!(a, b);
    }
}
