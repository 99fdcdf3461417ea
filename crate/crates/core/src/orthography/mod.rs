//! Vietnamese writing system: letters, tone marks and syllable structure.
//!
//! A written syllable is decomposed into an onset consonant cluster, a
//! nucleus of one to three vowel letters (each possibly carrying a
//! circumflex, breve or horn), a consonant coda and a tone. The tone mark
//! position is stored explicitly so that both "old style" (`hòa`) and "new
//! style" (`hoà`) spellings survive a parse/render roundtrip unchanged.

mod letters;
mod lexicon;
mod token;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use letters::{compose_letter, decompose_letter, Letter};
pub use lexicon::{load_syllable_lexicon, parse_syllable_lexicon, BUNDLED_SYLLABLES};
pub use token::{tokenize_sentence, Token, TokenKind, Tokens};

/// Canonical composition (NFC). Idempotent.
pub fn normalize(text: &str) -> String {
    text.nfc().collect()
}

/// The six Vietnamese tones. `Ngang` is the unmarked level tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tone {
    Ngang,
    Sac,
    Huyen,
    Hoi,
    Nga,
    Nang,
}

impl Tone {
    pub const ALL: [Tone; 6] = [
        Tone::Ngang,
        Tone::Sac,
        Tone::Huyen,
        Tone::Hoi,
        Tone::Nga,
        Tone::Nang,
    ];

    /// Combining mark used to write this tone, `None` for `Ngang`.
    pub fn combining_mark(self) -> Option<char> {
        match self {
            Tone::Ngang => None,
            Tone::Sac => Some('\u{0301}'),
            Tone::Huyen => Some('\u{0300}'),
            Tone::Hoi => Some('\u{0309}'),
            Tone::Nga => Some('\u{0303}'),
            Tone::Nang => Some('\u{0323}'),
        }
    }

    pub fn from_combining_mark(c: char) -> Option<Tone> {
        match c {
            '\u{0301}' => Some(Tone::Sac),
            '\u{0300}' => Some(Tone::Huyen),
            '\u{0309}' => Some(Tone::Hoi),
            '\u{0303}' => Some(Tone::Nga),
            '\u{0323}' => Some(Tone::Nang),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseVowel {
    A,
    E,
    I,
    O,
    U,
    Y,
}

impl BaseVowel {
    pub fn from_char(c: char) -> Option<BaseVowel> {
        match c {
            'a' => Some(BaseVowel::A),
            'e' => Some(BaseVowel::E),
            'i' => Some(BaseVowel::I),
            'o' => Some(BaseVowel::O),
            'u' => Some(BaseVowel::U),
            'y' => Some(BaseVowel::Y),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            BaseVowel::A => 'a',
            BaseVowel::E => 'e',
            BaseVowel::I => 'i',
            BaseVowel::O => 'o',
            BaseVowel::U => 'u',
            BaseVowel::Y => 'y',
        }
    }
}

/// Vowel quality mark (not a tone).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modifier {
    None,
    /// â ê ô
    Circumflex,
    /// ă
    Breve,
    /// ơ ư
    Horn,
}

impl Modifier {
    pub fn combining_mark(self) -> Option<char> {
        match self {
            Modifier::None => None,
            Modifier::Circumflex => Some('\u{0302}'),
            Modifier::Breve => Some('\u{0306}'),
            Modifier::Horn => Some('\u{031B}'),
        }
    }

    pub fn from_combining_mark(c: char) -> Option<Modifier> {
        match c {
            '\u{0302}' => Some(Modifier::Circumflex),
            '\u{0306}' => Some(Modifier::Breve),
            '\u{031B}' => Some(Modifier::Horn),
            _ => None,
        }
    }

    /// Whether `self` may decorate the letter `base`.
    pub fn allowed_on(self, base: char) -> bool {
        match self {
            Modifier::None => true,
            Modifier::Circumflex => matches!(base, 'a' | 'e' | 'o'),
            Modifier::Breve => base == 'a',
            Modifier::Horn => matches!(base, 'o' | 'u'),
        }
    }
}

/// One of the twelve Vietnamese vowel letters (without tone).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VowelLetter {
    base: BaseVowel,
    modifier: Modifier,
}

impl VowelLetter {
    pub fn new(base: BaseVowel, modifier: Modifier) -> Option<VowelLetter> {
        modifier
            .allowed_on(base.as_char())
            .then_some(VowelLetter { base, modifier })
    }

    pub fn plain(base: BaseVowel) -> VowelLetter {
        VowelLetter {
            base,
            modifier: Modifier::None,
        }
    }

    pub fn base(&self) -> BaseVowel {
        self.base
    }

    pub fn modifier(&self) -> Modifier {
        self.modifier
    }
}

/// Onsets, longest first so that greedy matching picks `ngh` over `ng`.
pub const ONSETS: &[&str] = &[
    "ngh", "ch", "gh", "gi", "kh", "ng", "nh", "ph", "qu", "th", "tr", "b", "c", "d", "đ", "g",
    "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "x",
];

/// Consonant codas. Final semivowels (`chào`, `tôi`) belong to the vowel
/// sequence.
pub const CODAS: &[&str] = &["ch", "ng", "nh", "c", "m", "n", "p", "t"];

/// Letters of the 29-letter alphabet (lowercase, without tone marks).
pub const ALPHABET: [&str; 29] = [
    "a", "ă", "â", "b", "c", "d", "đ", "e", "ê", "g", "h", "i", "k", "l", "m", "n", "o", "ô", "ơ",
    "p", "q", "r", "s", "t", "u", "ư", "v", "x", "y",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyllableError {
    #[error("empty syllable")]
    Empty,
    #[error("character {0:?} is not a Vietnamese letter")]
    ForeignLetter(char),
    #[error("tone mark on consonant {0:?}")]
    ToneOnConsonant(char),
    #[error("more than one tone mark")]
    MultipleTones,
    #[error("illegal onset {0:?}")]
    IllegalOnset(String),
    #[error("illegal coda {0:?}")]
    IllegalCoda(String),
    #[error("no vowel")]
    NoVowel,
    #[error("vowel sequence longer than three letters")]
    TooManyVowels,
}

/// Structured decomposition of one written syllable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syllable {
    /// Lowercase onset from [`ONSETS`], or empty.
    pub onset: String,
    pub vowels: Vec<VowelLetter>,
    /// Lowercase coda from [`CODAS`], or empty.
    pub coda: String,
    pub tone: Tone,
    /// Index into `vowels` of the letter carrying the tone mark.
    pub tone_index: usize,
    /// Capitalisation of every rendered letter, onset through coda.
    pub case_mask: Vec<bool>,
}

impl Syllable {
    /// Build a lowercase syllable with canonical tone placement.
    pub fn new(onset: &str, vowels: Vec<VowelLetter>, coda: &str, tone: Tone) -> Syllable {
        let tone_index = canonical_tone_index(&vowels, coda);
        let len = onset.chars().count() + vowels.len() + coda.chars().count();
        Syllable {
            onset: onset.to_string(),
            vowels,
            coda: coda.to_string(),
            tone,
            tone_index,
            case_mask: vec![false; len],
        }
    }

    /// Number of rendered letters.
    pub fn letter_count(&self) -> usize {
        self.onset.chars().count() + self.vowels.len() + self.coda.chars().count()
    }

    pub fn is_capitalized(&self) -> bool {
        self.case_mask.first().copied().unwrap_or(false)
    }

    /// Letters in writing order, tone attached to the tone-bearing vowel.
    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(self.letter_count());
        for c in self.onset.chars() {
            out.push(Letter::consonant(c));
        }
        for (i, v) in self.vowels.iter().enumerate() {
            let tone = if i == self.tone_index {
                self.tone
            } else {
                Tone::Ngang
            };
            out.push(Letter::vowel(*v, tone));
        }
        for c in self.coda.chars() {
            out.push(Letter::consonant(c));
        }
        for (letter, upper) in out.iter_mut().zip(&self.case_mask) {
            letter.upper = *upper;
        }
        out
    }

    /// Replace onset/coda while carrying capitalisation over.
    pub fn respelled(&self, onset: &str, coda: &str) -> Syllable {
        let mut out = self.clone();
        out.onset = onset.to_string();
        out.coda = coda.to_string();
        out.case_mask = recase(&self.case_mask, out.letter_count());
        out
    }

    pub fn render(&self) -> String {
        render(self)
    }
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// Transfer a capitalisation pattern onto a word of a different length.
/// All-caps stays all-caps, otherwise only the initial letter's case is kept.
pub fn recase(mask: &[bool], len: usize) -> Vec<bool> {
    let all_upper = mask.len() > 1 && mask.iter().all(|&u| u);
    if all_upper {
        return vec![true; len];
    }
    let mut out = vec![false; len];
    if let (Some(first), Some(&upper)) = (out.first_mut(), mask.first()) {
        *first = upper;
    }
    out
}

/// Tone position used when a syllable is built without an explicit one.
///
/// The tone goes on the (last) modified vowel if there is one, otherwise on
/// the pre-coda vowel when a coda is present, otherwise on the first vowel
/// of a two-letter nucleus or the middle vowel of a three-letter nucleus.
pub fn canonical_tone_index(vowels: &[VowelLetter], coda: &str) -> usize {
    let n = vowels.len();
    if n <= 1 {
        return 0;
    }
    if let Some(i) = vowels.iter().rposition(|v| v.modifier != Modifier::None) {
        return i;
    }
    if !coda.is_empty() {
        n - 1
    } else if n == 2 {
        0
    } else {
        1
    }
}

fn is_vowel_letter(l: &Letter) -> bool {
    BaseVowel::from_char(l.base).is_some()
}

/// Parse an NFC word into a [`Syllable`].
pub fn parse_syllable(word: &str) -> Result<Syllable, SyllableError> {
    if word.is_empty() {
        return Err(SyllableError::Empty);
    }
    let mut letters = Vec::with_capacity(word.len());
    for c in word.chars() {
        letters.push(decompose_letter(c).ok_or(SyllableError::ForeignLetter(c))?);
    }
    for l in &letters {
        if !is_vowel_letter(l) && l.tone != Tone::Ngang {
            return Err(SyllableError::ToneOnConsonant(l.base));
        }
    }

    let plain: Vec<char> = letters.iter().map(|l| l.base).collect();
    let onset_len = match_onset(&letters);
    let onset: String = plain[..onset_len].iter().collect();
    if onset_len == 0 && !letters.first().is_some_and(is_vowel_letter) {
        // Consonant-initial word whose cluster is not a legal onset.
        let cluster: String = plain
            .iter()
            .take_while(|&&c| BaseVowel::from_char(c).is_none())
            .collect();
        return Err(SyllableError::IllegalOnset(cluster));
    }

    let nucleus_end = onset_len
        + letters[onset_len..]
            .iter()
            .take_while(|l| is_vowel_letter(l))
            .count();
    if nucleus_end == onset_len {
        return Err(SyllableError::NoVowel);
    }
    if nucleus_end - onset_len > 3 {
        return Err(SyllableError::TooManyVowels);
    }
    let coda: String = plain[nucleus_end..].iter().collect();
    if !coda.is_empty() && !CODAS.contains(&coda.as_str()) {
        return Err(SyllableError::IllegalCoda(coda));
    }

    let mut vowels = Vec::with_capacity(3);
    let mut tone = Tone::Ngang;
    let mut tone_index = None;
    for (i, l) in letters[onset_len..nucleus_end].iter().enumerate() {
        let base = BaseVowel::from_char(l.base).expect("nucleus holds vowels");
        vowels.push(VowelLetter {
            base,
            modifier: l.modifier,
        });
        if l.tone != Tone::Ngang {
            if tone_index.is_some() {
                return Err(SyllableError::MultipleTones);
            }
            tone = l.tone;
            tone_index = Some(i);
        }
    }
    let tone_index = tone_index.unwrap_or_else(|| canonical_tone_index(&vowels, &coda));

    Ok(Syllable {
        onset,
        vowels,
        coda,
        tone,
        tone_index,
        case_mask: letters.iter().map(|l| l.upper).collect(),
    })
}

/// Length (in letters) of the onset at the start of `letters`.
fn match_onset(letters: &[Letter]) -> usize {
    let followed_by_vowel = |n: usize| letters.get(n).is_some_and(is_vowel_letter);
    for onset in ONSETS {
        let n = onset.chars().count();
        if letters.len() < n {
            continue;
        }
        let matches = onset
            .chars()
            .zip(&letters[..n])
            .all(|(c, l)| l.base == c && l.modifier == Modifier::None && l.tone == Tone::Ngang);
        if !matches {
            continue;
        }
        // `gi` and `qu` absorb a vowel letter, so they need another vowel after.
        if (*onset == "gi" || *onset == "qu") && !followed_by_vowel(n) {
            continue;
        }
        return n;
    }
    0
}

/// Render a syllable back to NFC text.
pub fn render(s: &Syllable) -> String {
    s.letters().iter().map(|l| compose_letter(*l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: char) -> VowelLetter {
        VowelLetter::plain(BaseVowel::from_char(c).unwrap())
    }

    #[test]
    fn normalize_composes_combining_marks() {
        assert_eq!(normalize("a\u{0300}"), "\u{00E0}");
        assert_eq!(normalize("abc"), "abc");
        let decomposed = "Tie\u{0302}\u{0301}ng Vie\u{0323}\u{0302}t";
        let once = normalize(decomposed);
        assert_eq!(once, "Tiếng Việt");
        assert_eq!(normalize(&once), once);
    }

    #[test]
    fn parse_chao() {
        let s = parse_syllable("chào").unwrap();
        assert_eq!(s.onset, "ch");
        assert_eq!(s.vowels, vec![v('a'), v('o')]);
        assert_eq!(s.coda, "");
        assert_eq!(s.tone, Tone::Huyen);
        assert_eq!(s.tone_index, 0);
        assert_eq!(render(&s), "chào");
    }

    #[test]
    fn parse_nghi() {
        let s = parse_syllable("nghỉ").unwrap();
        assert_eq!(s.onset, "ngh");
        assert_eq!(s.vowels, vec![v('i')]);
        assert_eq!(s.tone, Tone::Hoi);
        assert_eq!(s.tone_index, 0);
    }

    #[test]
    fn rejects_foreign_letters() {
        assert_eq!(
            parse_syllable("chz"),
            Err(SyllableError::ForeignLetter('z'))
        );
        assert!(parse_syllable("wow").is_err());
        assert!(parse_syllable("abc").is_err());
        assert!(parse_syllable("str").is_err());
        assert!(parse_syllable("").is_err());
        assert!(parse_syllable("123").is_err());
    }

    #[test]
    fn render_from_parts() {
        let mut s = Syllable::new("ch", vec![v('a'), v('o')], "", Tone::Huyen);
        assert_eq!(s.tone_index, 0);
        assert_eq!(render(&s), "chào");
        s.tone = Tone::Ngang;
        assert_eq!(render(&s), "chao");

        let ie = vec![
            v('i'),
            VowelLetter::new(BaseVowel::E, Modifier::Circumflex).unwrap(),
        ];
        let s = Syllable::new("đ", ie, "n", Tone::Nang);
        assert_eq!(render(&s), "điện");
    }

    #[test]
    fn onset_special_cases() {
        let s = parse_syllable("gì").unwrap();
        assert_eq!((s.onset.as_str(), s.vowels.len()), ("g", 1));
        let s = parse_syllable("giữa").unwrap();
        assert_eq!((s.onset.as_str(), s.vowels.len()), ("gi", 2));
        let s = parse_syllable("quốc").unwrap();
        assert_eq!((s.onset.as_str(), s.coda.as_str()), ("qu", "c"));
        let s = parse_syllable("khuỷu").unwrap();
        assert_eq!(s.vowels.len(), 3);
        assert_eq!(s.tone_index, 1);
        let s = parse_syllable("người").unwrap();
        assert_eq!(s.tone_index, 1);
        assert!(parse_syllable("qa").is_err());
    }

    #[test]
    fn old_and_new_style_roundtrip() {
        for w in ["hòa", "hoà", "thủy", "thuỷ", "Hoà", "ĐIỆN", "Người"] {
            assert_eq!(render(&parse_syllable(w).unwrap()), w);
        }
        assert_eq!(parse_syllable("hòa").unwrap().tone_index, 0);
        assert_eq!(parse_syllable("hoà").unwrap().tone_index, 1);
    }

    #[test]
    fn vowel_letter_invariants() {
        assert!(VowelLetter::new(BaseVowel::I, Modifier::Circumflex).is_none());
        assert!(VowelLetter::new(BaseVowel::E, Modifier::Breve).is_none());
        assert!(VowelLetter::new(BaseVowel::A, Modifier::Horn).is_none());
        assert!(VowelLetter::new(BaseVowel::U, Modifier::Horn).is_some());
    }

    #[test]
    fn tone_on_consonant_rejected() {
        // n + combining acute
        assert!(parse_syllable(&normalize("an\u{0301}")).is_err());
    }

    #[test]
    fn recase_rules() {
        assert_eq!(recase(&[true, false, false], 2), vec![true, false]);
        assert_eq!(recase(&[true, true, true], 4), vec![true; 4]);
        assert_eq!(recase(&[false, false], 3), vec![false; 3]);
    }

    #[test]
    fn render_is_deterministic() {
        let s = parse_syllable("Nguyễn").unwrap();
        assert_eq!(render(&s).as_bytes(), render(&s).as_bytes());
    }
}
