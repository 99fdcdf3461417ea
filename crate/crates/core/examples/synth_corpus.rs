//! Build corrupted train/valid/test splits and save them to a directory.
//!
//! Usage: `cargo run --example synth_corpus -- [OUT_DIR]`

use std::path::PathBuf;

use vietspell::config::RunConfig;
use vietspell::corpus;
use vietspell::harness;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("vietspell-synth"), PathBuf::from);
    let config = RunConfig::default();
    let clean = harness::clean_sentences(&config, None)?;
    for split in harness::build_dataset(&config, clean)? {
        let counts = corpus::type_counts(&split);
        println!("{:>5}: {} pairs, edits per type {counts:?}", split.split.name(), split.len());
        corpus::save(&split, &out)?;
    }
    println!("saved to {}", out.display());
    Ok(())
}
