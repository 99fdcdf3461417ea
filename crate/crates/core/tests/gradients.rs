#[path = "common/gradcheck.rs"]
mod gradcheck;

use gradcheck::{corrector, embedder_mlm};
use vietspell::corrector::EmbedderMode;

#[test]
fn embedder_mlm_gradients() {
    let report = embedder_mlm().unwrap_or_else(|e| panic!("{e}"));
    assert!(report.checked.len() >= 10, "{:?}", report.checked);
    assert!(report.checked.contains_key("embedder.segment"));
    assert!(report.worst < gradcheck::TOLERANCE);
}

#[test]
fn corrector_gradients_without_embedder() {
    let report = corrector(EmbedderMode::None).unwrap_or_else(|e| panic!("{e}"));
    for k in ["corrector.tokens", "corrector.positions", "corrector.output.weight"] {
        assert!(report.checked.contains_key(k), "missing {k}");
    }
    assert!(!report.checked.keys().any(|k| k.starts_with("corrector.adapter")));
}

#[test]
fn corrector_gradients_with_frozen_states() {
    let report = corrector(EmbedderMode::Frozen).unwrap_or_else(|e| panic!("{e}"));
    assert!(report.checked.keys().any(|k| k.starts_with("corrector.adapter")));
}

#[test]
fn corrector_gradients_through_fine_tuned_embedder() {
    let report = corrector(EmbedderMode::FineTune).unwrap_or_else(|e| panic!("{e}"));
    assert!(report.checked.keys().any(|k| k.starts_with("embedder.layer")));
    assert!(report.checked.keys().any(|k| k.contains("cross_attn")));
}
