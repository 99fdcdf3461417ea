//! Masked-language-model pretraining of the character embedder.

use vietspell::corpus;
use vietspell::embedder::{train_mlm, EmbedderConfig, MlmConfig};
use vietspell::vocab::Vocab;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let sentences = corpus::generate_unique_sentences(0, 2000, 5, 12);
    let vocab = Vocab::build(&sentences)?;
    let config = EmbedderConfig {
        d_model: 32,
        d_ff: 64,
        ..Default::default()
    };
    let mlm = MlmConfig {
        epochs: 1,
        max_steps: Some(60),
        ..Default::default()
    };
    let (embedder, log) = train_mlm(&sentences, vocab, config, &mlm)?;
    print!("{}", log.to_tsv());
    let states = embedder.embed("xin chào")?;
    println!("embedding of \"xin chào\": {:?}", states.dim());
    Ok(())
}
