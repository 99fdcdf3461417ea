//! Telex keystroke codec.
//!
//! [`to_keystrokes`] emits the canonical key sequence a typist would enter
//! for a syllable: `đ → dd`, `â ê ô → aa ee oo`, `ă ơ ư → aw ow uw`, with the
//! tone key (`s f r x j`) typed right after the vowel that carries the mark.
//! [`compose`] runs the keys back through a small Telex state machine.

use std::fmt;

use thiserror::Error;

use crate::orthography::{compose_letter, tokenize_sentence, Letter, Modifier, Syllable, Tone};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TelexError {
    #[error("keystroke {0:?} is not an ASCII letter")]
    NotAsciiLetter(char),
}

/// Raw ASCII keystrokes, optionally tied to the syllable they spell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeystrokeSeq {
    keys: String,
    source: Option<Syllable>,
}

impl KeystrokeSeq {
    pub fn from_keys(keys: &str) -> Result<KeystrokeSeq, TelexError> {
        if let Some(c) = keys.chars().find(|c| !c.is_ascii_alphabetic()) {
            return Err(TelexError::NotAsciiLetter(c));
        }
        Ok(KeystrokeSeq {
            keys: keys.to_string(),
            source: None,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.keys
    }

    pub fn into_string(self) -> String {
        self.keys
    }

    pub fn source(&self) -> Option<&Syllable> {
        self.source.as_ref()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

impl fmt::Display for KeystrokeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.keys)
    }
}

pub fn tone_key(tone: Tone) -> Option<char> {
    match tone {
        Tone::Ngang => None,
        Tone::Sac => Some('s'),
        Tone::Huyen => Some('f'),
        Tone::Hoi => Some('r'),
        Tone::Nga => Some('x'),
        Tone::Nang => Some('j'),
    }
}

fn key_tone(key: char) -> Option<Tone> {
    match key {
        's' => Some(Tone::Sac),
        'f' => Some(Tone::Huyen),
        'r' => Some(Tone::Hoi),
        'x' => Some(Tone::Nga),
        'j' => Some(Tone::Nang),
        _ => None,
    }
}

fn is_vowel(base: char) -> bool {
    matches!(base, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

fn doubles_to_circumflex(base: char) -> bool {
    matches!(base, 'a' | 'e' | 'o' | 'd')
}

/// Canonical Telex emission for one syllable.
pub fn to_keystrokes(s: &Syllable) -> KeystrokeSeq {
    let letters = s.letters();
    let mut keys = String::with_capacity(letters.len() * 2);
    let mut prev: Option<Letter> = None;
    for l in &letters {
        let first = if l.base == 'đ' { 'd' } else { l.base };
        keys.push(if l.upper {
            first.to_ascii_uppercase()
        } else {
            first
        });
        if l.base == 'đ' {
            keys.push('d');
        }
        match l.modifier {
            Modifier::Circumflex => keys.push(l.base),
            Modifier::Breve | Modifier::Horn => keys.push('w'),
            Modifier::None => {
                // A plain letter right after the same plain letter would be
                // composed into a circumflex; a third key undoes that.
                let collides = prev.is_some_and(|p| {
                    p.base == l.base && p.modifier == Modifier::None && doubles_to_circumflex(l.base)
                });
                if collides {
                    keys.push(l.base);
                }
            }
        }
        if let Some(k) = tone_key(l.tone) {
            keys.push(k);
        }
        prev = Some(*l);
    }
    KeystrokeSeq {
        keys,
        source: Some(s.clone()),
    }
}

/// Compose Telex keystrokes into Vietnamese text.
///
/// Runs of ASCII letters are composed word by word; every other character
/// passes through unchanged, as do keys that trigger nothing.
pub fn compose(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut run = String::new();
    for c in text.chars() {
        if c.is_ascii_alphabetic() {
            run.push(c);
        } else {
            if !run.is_empty() {
                out.push_str(&compose_word(&run));
                run.clear();
            }
            out.push(c);
        }
    }
    if !run.is_empty() {
        out.push_str(&compose_word(&run));
    }
    out
}

fn literal(key: char) -> Letter {
    Letter {
        upper: key.is_ascii_uppercase(),
        ..Letter::consonant(key.to_ascii_lowercase())
    }
}

fn compose_word(keys: &str) -> String {
    let mut buf: Vec<Letter> = Vec::with_capacity(keys.len());
    for key in keys.chars() {
        let k = key.to_ascii_lowercase();
        let Some(prev) = buf.last_mut() else {
            buf.push(literal(key));
            continue;
        };

        if k == 'd' && prev.base == 'd' {
            prev.base = 'đ';
            continue;
        }
        if k == 'd' && prev.base == 'đ' {
            prev.base = 'd';
            buf.push(literal(key));
            continue;
        }
        if matches!(k, 'a' | 'e' | 'o') && prev.base == k {
            match prev.modifier {
                Modifier::None => {
                    prev.modifier = Modifier::Circumflex;
                    continue;
                }
                Modifier::Circumflex => {
                    prev.modifier = Modifier::None;
                    buf.push(literal(key));
                    continue;
                }
                _ => {}
            }
        }
        if k == 'w' && prev.modifier == Modifier::None {
            let m = match prev.base {
                'a' => Some(Modifier::Breve),
                'o' | 'u' => Some(Modifier::Horn),
                _ => None,
            };
            if let Some(m) = m {
                prev.modifier = m;
                continue;
            }
        }
        if let Some(tone) = key_tone(k) {
            if is_vowel(prev.base) {
                if prev.tone == tone {
                    prev.tone = Tone::Ngang;
                    buf.push(literal(key));
                } else {
                    let last = buf.len() - 1;
                    for l in &mut buf[..last] {
                        l.tone = Tone::Ngang;
                    }
                    buf[last].tone = tone;
                }
                continue;
            }
        }
        buf.push(literal(key));
    }
    buf.into_iter().map(compose_letter).collect()
}

/// Telex-encode every Vietnamese syllable of `text`, leaving other tokens.
pub fn encode_text(text: &str) -> String {
    let tokens = tokenize_sentence(text);
    let mut out = String::with_capacity(text.len() + text.len() / 2);
    for t in tokens.iter() {
        out.push_str(&t.space_before);
        match t.syllable() {
            Some(s) => out.push_str(to_keystrokes(s).as_str()),
            None => out.push_str(&t.text),
        }
    }
    out.push_str(&tokens.trailing);
    out
}
