//! Type Vietnamese syllables as Telex keystrokes and compose them back.

use vietspell::orthography::parse_syllable;
use vietspell::telex::{compose, encode_text, to_keystrokes};

fn main() {
    for word in ["chào", "học", "Điện", "thoại", "người", "khuỷu"] {
        let syllable = parse_syllable(word).expect("valid syllable");
        let keys = to_keystrokes(&syllable);
        println!("{word:>8} -> {:<10} -> {}", keys.as_str(), compose(keys.as_str()));
    }
    println!("{}", encode_text("Tôi đang học tiếng Việt."));
    println!("{}", compose("Tooi ddang hojc tieesng Vieejt."));
}
