use unicode_normalization::UnicodeNormalization;

use super::{Modifier, Tone};

/// A single letter split into base, vowel modifier, tone and case.
///
/// `base` is a lowercase ASCII letter or `đ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub base: char,
    pub modifier: Modifier,
    pub tone: Tone,
    pub upper: bool,
}

impl Letter {
    pub fn consonant(base: char) -> Letter {
        Letter {
            base,
            modifier: Modifier::None,
            tone: Tone::Ngang,
            upper: false,
        }
    }

    pub fn vowel(v: super::VowelLetter, tone: Tone) -> Letter {
        Letter {
            base: v.base().as_char(),
            modifier: v.modifier(),
            tone,
            upper: false,
        }
    }
}

fn in_alphabet(c: char) -> bool {
    c.is_ascii_lowercase() && !matches!(c, 'f' | 'j' | 'w' | 'z')
}

/// Decompose one character of the Vietnamese alphabet. Returns `None` for
/// anything outside the 29 letters and their tone/modifier combinations.
pub fn decompose_letter(c: char) -> Option<Letter> {
    let mut lower_iter = c.to_lowercase();
    let lower = lower_iter.next()?;
    if lower_iter.next().is_some() {
        return None;
    }
    let upper = lower != c;
    if lower == 'đ' {
        return Some(Letter {
            upper,
            ..Letter::consonant('đ')
        });
    }
    let mut parts = std::iter::once(lower).nfd();
    let base = parts.next()?;
    if !in_alphabet(base) {
        return None;
    }
    let mut modifier = Modifier::None;
    let mut tone = Tone::Ngang;
    for mark in parts {
        if let Some(m) = Modifier::from_combining_mark(mark) {
            if modifier != Modifier::None || !m.allowed_on(base) {
                return None;
            }
            modifier = m;
        } else if let Some(t) = Tone::from_combining_mark(mark) {
            if tone != Tone::Ngang || !matches!(base, 'a' | 'e' | 'i' | 'o' | 'u' | 'y') {
                return None;
            }
            tone = t;
        } else {
            return None;
        }
    }
    Some(Letter {
        base,
        modifier,
        tone,
        upper,
    })
}

/// Compose a letter into a single NFC character sequence.
pub fn compose_letter(l: Letter) -> String {
    let mut s = String::with_capacity(4);
    s.push(l.base);
    s.extend(l.modifier.combining_mark());
    s.extend(l.tone.combining_mark());
    let composed: String = s.nfc().collect();
    if l.upper {
        composed.to_uppercase()
    } else {
        composed
    }
}
