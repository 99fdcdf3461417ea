//! Corpus BLEU of uncorrected noisy text, with a per-error-type breakdown.

use vietspell::bleu::{corpus_bleu, corpus_bleu_by_type, BleuConfig};
use vietspell::corpus;
use vietspell::errorgen::{CorruptionSpec, Corruptor};

fn main() {
    let refs = corpus::generate_sentences(2, 200, 8, 20);
    let corruptor = Corruptor::new(CorruptionSpec::default()).unwrap();
    let noisy: Vec<_> = refs.iter().enumerate().map(|(i, r)| corruptor.corrupt_sentence(i as u64, r)).collect();
    let pairs: Vec<(&str, &str)> = noisy.iter().zip(&refs).map(|((n, _), r)| (n.as_str(), r.as_str())).collect();
    let records: Vec<_> = noisy.iter().map(|(_, rec)| rec.clone()).collect();

    let config = BleuConfig::default();
    let report = corpus_bleu_by_type(&pairs, &records, &config).unwrap();
    print!("{}", report.to_table());
    let perfect: Vec<(&str, &str)> = refs.iter().map(|r| (r.as_str(), r.as_str())).collect();
    println!("identity on references: {}", corpus_bleu(&perfect, &config).unwrap().bleu);
}
