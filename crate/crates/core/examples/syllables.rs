//! Parse syllables into onset, vowel letters, coda and tone.

use vietspell::orthography::{parse_syllable, tokenize_sentence};

fn main() {
    for word in ["nghiêng", "quốc", "gìn", "hoà", "xyz"] {
        match parse_syllable(word) {
            Ok(s) => println!("{word}: onset {:?} coda {:?} tone {:?} -> {}", s.onset, s.coda, s.tone, s.render()),
            Err(e) => println!("{word}: {e}"),
        }
    }
    let tokens = tokenize_sentence("Hôm nay, trời đẹp quá!");
    for t in tokens.iter() {
        println!("{:?} syllable={}", t.text, t.is_syllable());
    }
}
