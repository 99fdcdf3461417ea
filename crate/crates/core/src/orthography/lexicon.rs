use std::fs;
use std::io;
use std::path::Path;

use super::normalize;

/// Syllable list shipped with the crate, one NFC syllable per line.
pub const BUNDLED_SYLLABLES: &str = include_str!("../../data/syllables.txt");

/// Parse a syllable lexicon: one syllable per line, `#` starts a comment.
pub fn parse_syllable_lexicon(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(normalize)
        .collect()
}

pub fn load_syllable_lexicon(path: &Path) -> io::Result<Vec<String>> {
    Ok(parse_syllable_lexicon(&fs::read_to_string(path)?))
}
