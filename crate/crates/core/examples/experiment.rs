//! The full comparison (identity, edit-distance baseline, corrector with
//! and without the embedder) at a size that runs in a couple of minutes.
//!
//! Usage: `cargo run --release --example experiment -- [OUT_DIR]`

use std::path::PathBuf;

use vietspell::config::RunConfig;
use vietspell::harness::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("vietspell-experiment"), PathBuf::from);
    let mut config = RunConfig::toy();
    config.apply_text(
        "corpus.generate = 2500
         corpus.train = 2000
         corpus.valid = 100
         corpus.test = 100
         embedder.epochs = 1
         train.epochs = 2",
    )?;
    let report = run_experiment(&config, None, &out)?;
    print!("{}", report.to_table());
    println!("artifacts in {}", out.display());
    Ok(())
}
