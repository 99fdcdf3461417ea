//! Seedable pseudo spelling-error generator.
//!
//! Six error types are mixed at configurable ratios. Every sentence draws
//! from its own RNG stream derived from `(seed, sentence_id)`, so a corpus
//! can be corrupted in any order or on any number of threads with the same
//! result. Each corrupted sentence comes with a [`CorruptionRecord`] that
//! replays the edits on the clean text.

mod keyboard;
mod lexicon;
mod region;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orthography::{parse_syllable, render, tokenize_sentence, Token, Tokens};
use crate::telex::{compose, to_keystrokes};

pub use keyboard::{KeyboardLayout, LayoutError, BUNDLED_QWERTY};
pub use lexicon::{
    LexiconError, LexiconKind, SubstitutionLexicon, BUNDLED_ABBREVIATIONS, BUNDLED_TEENCODE,
};
pub use region::{applicable_rules, RegionRule};

/// Type retries per corruption slot before the slot is skipped.
pub const MAX_TYPE_RETRIES: usize = 5;
/// Attempts at a randomized corruption that must differ from its input.
const MAX_SURFACE_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    Abbreviation,
    Teencode,
    FatFinger,
    Telex,
    Region,
    EditDistance,
}

impl ErrorType {
    pub const COUNT: usize = 6;
    pub const ALL: [ErrorType; 6] = [
        ErrorType::Abbreviation,
        ErrorType::Teencode,
        ErrorType::FatFinger,
        ErrorType::Telex,
        ErrorType::Region,
        ErrorType::EditDistance,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::Abbreviation => "abbreviation",
            ErrorType::Teencode => "teencode",
            ErrorType::FatFinger => "fat_finger",
            ErrorType::Telex => "telex",
            ErrorType::Region => "region",
            ErrorType::EditDistance => "edit_distance",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorType {
    type Err = String;

    fn from_str(s: &str) -> Result<ErrorType, String> {
        ErrorType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown error type {s:?}"))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("ratio for {0} is outside [0, 1]")]
    RatioRange(ErrorType),
    #[error("ratios sum to {0}, expected 1")]
    RatioSum(f64),
    #[error("word_error_rate {0} is outside [0, 1]")]
    WordErrorRate(f64),
    #[error("edit_distance_max must be at least 1")]
    EditDistanceMax,
}

/// Error-type mix and corruption density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Indexed by [`ErrorType::index`].
    pub ratios: [f64; ErrorType::COUNT],
    /// Fraction of Vietnamese syllables corrupted per sentence (rounded up).
    pub word_error_rate: f64,
    pub edit_distance_max: usize,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec {
            ratios: [0.03, 0.03, 0.30, 0.30, 0.31, 0.03],
            word_error_rate: 0.15,
            edit_distance_max: 2,
            seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn ratio(&self, t: ErrorType) -> f64 {
        self.ratios[t.index()]
    }

    pub fn set_ratio(&mut self, t: ErrorType, r: f64) {
        self.ratios[t.index()] = r;
    }

    /// All weight on a single type.
    pub fn only(t: ErrorType) -> CorruptionSpec {
        let mut spec = CorruptionSpec {
            ratios: [0.0; ErrorType::COUNT],
            ..Default::default()
        };
        spec.set_ratio(t, 1.0);
        spec
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for t in ErrorType::ALL {
            let r = self.ratio(t);
            if !(0.0..=1.0).contains(&r) {
                return Err(SpecError::RatioRange(t));
            }
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SpecError::RatioSum(sum));
        }
        if !(0.0..=1.0).contains(&self.word_error_rate) {
            return Err(SpecError::WordErrorRate(self.word_error_rate));
        }
        if self.edit_distance_max == 0 {
            return Err(SpecError::EditDistanceMax);
        }
        Ok(())
    }
}

/// Draw an error type from the categorical distribution of `spec.ratios`.
pub fn sample_error_type<R: Rng + ?Sized>(rng: &mut R, spec: &CorruptionSpec) -> ErrorType {
    let total: f64 = spec.ratios.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for t in ErrorType::ALL {
        acc += spec.ratio(t);
        if u < acc {
            return t;
        }
    }
    // u landed on the rounding slack above the last bucket.
    *ErrorType::ALL
        .iter()
        .rev()
        .find(|t| spec.ratio(**t) > 0.0)
        .unwrap_or(&ErrorType::EditDistance)
}

/// One substitution of a token span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    /// Token range `[start, end)` in the clean sentence.
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub error_type: ErrorType,
    pub original: String,
    pub corrupted: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub sentence_id: u64,
    pub edits: Vec<Edit>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("edit {index} covers tokens {start}..{end} outside the sentence")]
    OutOfRange {
        index: usize,
        start: usize,
        end: usize,
    },
    #[error("edit {index} overlaps or precedes the previous edit")]
    Unordered { index: usize },
    #[error("edit {index} expects {expected:?} but the sentence has {found:?}")]
    Mismatch {
        index: usize,
        expected: String,
        found: String,
    },
}

impl CorruptionRecord {
    pub fn contains(&self, t: ErrorType) -> bool {
        self.edits.iter().any(|e| e.error_type == t)
    }

    /// Re-apply the edits to the clean sentence.
    pub fn apply(&self, clean: &str) -> Result<String, ReplayError> {
        let tokens = tokenize_sentence(clean);
        let mut out = String::with_capacity(clean.len() + 16);
        let mut cursor = 0;
        for (index, e) in self.edits.iter().enumerate() {
            if e.start >= e.end || e.end > tokens.len() {
                return Err(ReplayError::OutOfRange {
                    index,
                    start: e.start,
                    end: e.end,
                });
            }
            if e.start < cursor {
                return Err(ReplayError::Unordered { index });
            }
            for t in &tokens[cursor..e.start] {
                out.push_str(&t.space_before);
                out.push_str(&t.text);
            }
            let found = span_text(&tokens, e.start, e.end);
            if found != e.original {
                return Err(ReplayError::Mismatch {
                    index,
                    expected: e.original.clone(),
                    found,
                });
            }
            out.push_str(&tokens[e.start].space_before);
            out.push_str(&e.corrupted);
            cursor = e.end;
        }
        for t in &tokens[cursor..] {
            out.push_str(&t.space_before);
            out.push_str(&t.text);
        }
        out.push_str(&tokens.trailing);
        Ok(out)
    }
}

/// Text of tokens `[start, end)` including the whitespace between them.
fn span_text(tokens: &[Token], start: usize, end: usize) -> String {
    let mut s = tokens[start].text.clone();
    for t in &tokens[start + 1..end] {
        s.push_str(&t.space_before);
        s.push_str(&t.text);
    }
    s
}

/// The requested error type cannot produce a changed surface form here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("error type not applicable to this token")]
pub struct NotApplicable;

/// Copy the capitalisation of `original` onto `replacement`.
fn transfer_case(original: &str, replacement: &str) -> String {
    let mut letters = original.chars().filter(|c| c.is_alphabetic());
    let first_upper = letters.next().is_some_and(char::is_uppercase);
    let all_upper = first_upper && {
        let rest: Vec<char> = letters.collect();
        !rest.is_empty() && rest.iter().all(|c| c.is_uppercase())
    };
    if all_upper {
        return replacement.to_uppercase();
    }
    if !first_upper {
        return replacement.to_string();
    }
    let mut chars = replacement.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Derive the per-sentence RNG.
pub fn sentence_rng(seed: u64, sentence_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(sentence_id.wrapping_add(1))))
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const EDIT_ALPHABET: &[u8] = b"abcdeghiklmnopqrstuvxy";

/// Error generator bundling the spec with its lexicons and keyboard.
#[derive(Debug, Clone)]
pub struct Corruptor {
    spec: CorruptionSpec,
    abbreviations: SubstitutionLexicon,
    teencode: SubstitutionLexicon,
    layout: KeyboardLayout,
}

impl Corruptor {
    /// Corruptor backed by the bundled lexicons and QWERTY layout.
    pub fn new(spec: CorruptionSpec) -> Result<Corruptor, SpecError> {
        Corruptor::with_resources(
            spec,
            SubstitutionLexicon::bundled(LexiconKind::Abbreviation),
            SubstitutionLexicon::bundled(LexiconKind::Teencode),
            KeyboardLayout::qwerty(),
        )
    }

    pub fn with_resources(
        spec: CorruptionSpec,
        abbreviations: SubstitutionLexicon,
        teencode: SubstitutionLexicon,
        layout: KeyboardLayout,
    ) -> Result<Corruptor, SpecError> {
        spec.validate()?;
        Ok(Corruptor {
            spec,
            abbreviations,
            teencode,
            layout,
        })
    }

    pub fn spec(&self) -> &CorruptionSpec {
        &self.spec
    }

    pub fn layout(&self) -> &KeyboardLayout {
        &self.layout
    }

    fn lexicon(&self, t: ErrorType) -> Option<&SubstitutionLexicon> {
        match t {
            ErrorType::Abbreviation => Some(&self.abbreviations),
            ErrorType::Teencode => Some(&self.teencode),
            _ => None,
        }
    }

    /// Corrupt a single token. Lexicon types only match one-syllable
    /// entries here; phrase matches need sentence context.
    pub fn corrupt_word<R: Rng + ?Sized>(
        &self,
        token: &Token,
        error_type: ErrorType,
        rng: &mut R,
    ) -> Result<String, NotApplicable> {
        let syllable = token.syllable().ok_or(NotApplicable)?;
        let out = match error_type {
            ErrorType::Abbreviation | ErrorType::Teencode => {
                let lex = self.lexicon(error_type).expect("lexicon type");
                let rep = lex.lookup(&token.text).ok_or(NotApplicable)?;
                transfer_case(&token.text, rep)
            }
            ErrorType::Telex => to_keystrokes(syllable).into_string(),
            ErrorType::FatFinger => return self.fat_finger(&token.text, rng),
            ErrorType::Region => {
                let rules = applicable_rules(syllable);
                let rule = rules.choose(rng).ok_or(NotApplicable)?;
                render(&rule.apply(syllable))
            }
            ErrorType::EditDistance => return self.edit_distance(&token.text, rng),
        };
        if out == token.text {
            Err(NotApplicable)
        } else {
            Ok(out)
        }
    }

    /// Corrupt starting at token `pos`, possibly consuming a phrase.
    /// Returns the end of the covered token range and its replacement.
    fn corrupt_at<R: Rng + ?Sized>(
        &self,
        tokens: &Tokens,
        consumed: &[bool],
        pos: usize,
        error_type: ErrorType,
        rng: &mut R,
    ) -> Result<(usize, String), NotApplicable> {
        if let Some(lex) = self.lexicon(error_type) {
            // Contiguous run of free, whitespace-separated syllables.
            let mut words = Vec::new();
            for (i, t) in tokens.iter().enumerate().skip(pos) {
                let joined = i == pos || !t.space_before.is_empty();
                if !t.is_syllable() || consumed[i] || !joined {
                    break;
                }
                words.push(t.text.to_lowercase());
            }
            let (len, rep) = lex.longest_match(&words).ok_or(NotApplicable)?;
            let original = span_text(tokens, pos, pos + len);
            let out = transfer_case(&original, rep);
            return if out == original {
                Err(NotApplicable)
            } else {
                Ok((pos + len, out))
            };
        }
        self.corrupt_word(&tokens[pos], error_type, rng)
            .map(|s| (pos + 1, s))
    }

    fn fat_finger<R: Rng + ?Sized>(&self, word: &str, rng: &mut R) -> Result<String, NotApplicable> {
        let syllable = parse_syllable(word).map_err(|_| NotApplicable)?;
        let keys: Vec<char> = to_keystrokes(&syllable).as_str().chars().collect();
        for _ in 0..MAX_SURFACE_RETRIES {
            let i = rng.gen_range(0..keys.len());
            let Some(&sub) = self.layout.neighbors(keys[i].to_ascii_lowercase()).choose(rng) else {
                continue;
            };
            let out = fat_finger_at(&keys, i, sub);
            if out != word {
                return Ok(out);
            }
        }
        Err(NotApplicable)
    }

    fn edit_distance<R: Rng + ?Sized>(
        &self,
        word: &str,
        rng: &mut R,
    ) -> Result<String, NotApplicable> {
        let original: Vec<char> = word.chars().collect();
        for _ in 0..MAX_SURFACE_RETRIES {
            let mut chars = original.clone();
            let ops = rng.gen_range(1..=self.spec.edit_distance_max);
            for _ in 0..ops {
                let letter = EDIT_ALPHABET[rng.gen_range(0..EDIT_ALPHABET.len())] as char;
                match rng.gen_range(0..4) {
                    0 => {
                        let at = rng.gen_range(0..=chars.len());
                        chars.insert(at, letter);
                    }
                    1 if chars.len() > 1 => {
                        let at = rng.gen_range(0..chars.len());
                        chars.remove(at);
                    }
                    3 if chars.len() > 1 => {
                        let at = rng.gen_range(0..chars.len() - 1);
                        chars.swap(at, at + 1);
                    }
                    _ => {
                        let at = rng.gen_range(0..chars.len());
                        chars[at] = letter;
                    }
                }
            }
            let out: String = chars.into_iter().collect();
            if out != word {
                return Ok(out);
            }
        }
        Err(NotApplicable)
    }

    /// Corrupt one clean sentence.
    ///
    /// `⌈word_error_rate · n⌉` of the `n` Vietnamese syllables are corrupted.
    /// Each slot first draws an error type, then picks uniformly among the
    /// still-unused positions where that type applies; if none exists the
    /// type is redrawn (at most [`MAX_TYPE_RETRIES`] times).
    pub fn corrupt_sentence(&self, sentence_id: u64, sentence: &str) -> (String, CorruptionRecord) {
        let mut rng = sentence_rng(self.spec.seed, sentence_id);
        let tokens = tokenize_sentence(sentence);
        let eligible: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_syllable())
            .map(|(i, _)| i)
            .collect();
        let slots = corruption_count(self.spec.word_error_rate, eligible.len());
        let mut consumed = vec![false; tokens.len()];
        let mut edits = Vec::with_capacity(slots);

        for _ in 0..slots {
            'slot: for _ in 0..MAX_TYPE_RETRIES {
                let error_type = sample_error_type(&mut rng, &self.spec);
                let mut free: Vec<usize> =
                    eligible.iter().copied().filter(|&i| !consumed[i]).collect();
                if free.is_empty() {
                    break 'slot;
                }
                free.shuffle(&mut rng);
                for pos in free {
                    let Ok((end, corrupted)) =
                        self.corrupt_at(&tokens, &consumed, pos, error_type, &mut rng)
                    else {
                        continue;
                    };
                    consumed[pos..end].iter_mut().for_each(|c| *c = true);
                    edits.push(Edit {
                        start: pos,
                        end,
                        error_type,
                        original: span_text(&tokens, pos, end),
                        corrupted,
                    });
                    break 'slot;
                }
            }
        }
        edits.sort_by_key(|e| e.start);
        let record = CorruptionRecord { sentence_id, edits };
        let corrupted = record
            .apply(sentence)
            .expect("generated edits replay on their own sentence");
        (corrupted, record)
    }
}

/// Number of corruption slots for `n` eligible tokens.
pub fn corruption_count(word_error_rate: f64, n: usize) -> usize {
    // Guard against 0.15 * 20 = 3.0000000000000004.
    let exact = word_error_rate * n as f64;
    ((exact - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Replace key `index` of a keystroke sequence by `sub` (keeping its case)
/// and recompose.
pub fn fat_finger_at(keys: &[char], index: usize, sub: char) -> String {
    let mut keys = keys.to_vec();
    keys[index] = if keys[index].is_ascii_uppercase() {
        sub.to_ascii_uppercase()
    } else {
        sub
    };
    compose(&keys.into_iter().collect::<String>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthography::tokenize_sentence;

    fn token(w: &str) -> Token {
        tokenize_sentence(w).tokens.remove(0)
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn default_spec_matches_ratio_table() {
        let s = CorruptionSpec::default();
        assert_eq!(s.ratio(ErrorType::Abbreviation), 0.03);
        assert_eq!(s.ratio(ErrorType::Teencode), 0.03);
        assert_eq!(s.ratio(ErrorType::EditDistance), 0.03);
        assert_eq!(s.ratio(ErrorType::FatFinger), 0.30);
        assert_eq!(s.ratio(ErrorType::Telex), 0.30);
        assert_eq!(s.ratio(ErrorType::Region), 0.31);
        s.validate().unwrap();
    }

    #[test]
    fn spec_validation() {
        let mut s = CorruptionSpec::default();
        s.set_ratio(ErrorType::Region, 0.5);
        assert!(matches!(s.validate(), Err(SpecError::RatioSum(_))));
        let mut s = CorruptionSpec::default();
        s.word_error_rate = 1.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn degenerate_distribution() {
        let spec = CorruptionSpec::only(ErrorType::Telex);
        let mut r = rng();
        for _ in 0..1000 {
            assert_eq!(sample_error_type(&mut r, &spec), ErrorType::Telex);
        }
    }

    #[test]
    fn sampling_frequencies_and_determinism() {
        let spec = CorruptionSpec::default();
        let mut a = rng();
        let mut b = rng();
        let mut counts = [0usize; 6];
        for _ in 0..100_000 {
            let t = sample_error_type(&mut a, &spec);
            assert_eq!(t, sample_error_type(&mut b, &spec));
            counts[t.index()] += 1;
        }
        for t in ErrorType::ALL {
            let f = counts[t.index()] as f64 / 100_000.0;
            assert!((f - spec.ratio(t)).abs() < 0.01, "{t}: {f}");
        }
    }

    #[test]
    fn word_examples() {
        let c = Corruptor::new(CorruptionSpec::default()).unwrap();
        let mut r = rng();
        assert_eq!(c.corrupt_word(&token("chào"), ErrorType::Telex, &mut r).unwrap(), "chafo");
        assert_eq!(
            c.corrupt_word(&token("Không"), ErrorType::Abbreviation, &mut r).unwrap(),
            "Kg"
        );
        assert_eq!(
            c.corrupt_word(&token("tranh"), ErrorType::Region, &mut r).unwrap(),
            "chanh"
        );
        assert_eq!(
            c.corrupt_word(&token("Chồng"), ErrorType::Teencode, &mut r).unwrap(),
            "Cho`ng"
        );
        let keys: Vec<char> = "Xin".chars().collect();
        assert_eq!(fat_finger_at(&keys, 2, 'm'), "Xim");
        let keys: Vec<char> = "hojc".chars().collect();
        assert_eq!(fat_finger_at(&keys, 1, 'i'), "hịc");
    }

    #[test]
    fn not_applicable_cases() {
        let c = Corruptor::new(CorruptionSpec::default()).unwrap();
        let mut r = rng();
        assert_eq!(
            c.corrupt_word(&token("2024"), ErrorType::EditDistance, &mut r),
            Err(NotApplicable)
        );
        assert_eq!(c.corrupt_word(&token("xin"), ErrorType::Telex, &mut r), Err(NotApplicable));
        assert_eq!(
            c.corrupt_word(&token("xem"), ErrorType::Region, &mut r),
            Err(NotApplicable)
        );
        assert_eq!(
            c.corrupt_word(&token("bàn"), ErrorType::Abbreviation, &mut r),
            Err(NotApplicable)
        );
    }

    #[test]
    fn phrase_level_substitution() {
        let c = Corruptor::new(CorruptionSpec::only(ErrorType::Teencode)).unwrap();
        let tokens = tokenize_sentence("Điện thoại của tôi");
        let consumed = vec![false; tokens.len()];
        let (end, text) = c
            .corrupt_at(&tokens, &consumed, 0, ErrorType::Teencode, &mut rng())
            .unwrap();
        assert_eq!((end, text.as_str()), (2, "Dj3n tk04j"));
        let c = Corruptor::new(CorruptionSpec::only(ErrorType::Abbreviation)).unwrap();
        let tokens = tokenize_sentence("Mọi người đều vui");
        let (end, text) = c
            .corrupt_at(&tokens, &consumed, 0, ErrorType::Abbreviation, &mut rng())
            .unwrap();
        assert_eq!((end, text.as_str()), (2, "Mn"));
    }

    #[test]
    fn zero_rate_is_identity() {
        let spec = CorruptionSpec {
            word_error_rate: 0.0,
            ..Default::default()
        };
        let c = Corruptor::new(spec).unwrap();
        let (out, rec) = c.corrupt_sentence(3, "Xin chào các bạn.");
        assert_eq!(out, "Xin chào các bạn.");
        assert!(rec.edits.is_empty());
    }

    #[test]
    fn sentence_corruption_is_deterministic_and_replayable() {
        let c = Corruptor::new(CorruptionSpec {
            word_error_rate: 0.5,
            ..Default::default()
        })
        .unwrap();
        let s = "Hôm qua mọi người ở Hà Nội không được nghỉ vì trời mưa quá to.";
        for id in 0..200 {
            let (a, ra) = c.corrupt_sentence(id, s);
            let (b, rb) = c.corrupt_sentence(id, s);
            assert_eq!(a, b);
            assert_eq!(ra, rb);
            assert_eq!(ra.apply(s).unwrap(), a);
            assert!(!ra.edits.is_empty());
        }
    }

    #[test]
    fn replay_detects_mismatch() {
        let rec = CorruptionRecord {
            sentence_id: 0,
            edits: vec![Edit {
                start: 0,
                end: 1,
                error_type: ErrorType::Telex,
                original: "chào".into(),
                corrupted: "chafo".into(),
            }],
        };
        assert_eq!(rec.apply("chào bạn").unwrap(), "chafo bạn");
        assert!(rec.apply("xin chào").is_err());
        assert!(rec.apply("").is_err());
    }

    #[test]
    fn slot_count_rounds_up() {
        assert_eq!(corruption_count(0.15, 20), 3);
        assert_eq!(corruption_count(0.15, 8), 2);
        assert_eq!(corruption_count(0.15, 0), 0);
        assert_eq!(corruption_count(0.0, 10), 0);
        assert_eq!(corruption_count(1.0, 10), 10);
    }

    #[test]
    fn case_transfer() {
        assert_eq!(transfer_case("Không", "kg"), "Kg");
        assert_eq!(transfer_case("không", "kg"), "kg");
        assert_eq!(transfer_case("KHÔNG", "kg"), "KG");
        assert_eq!(transfer_case("Điện thoại", "dj3n tk04j"), "Dj3n tk04j");
    }
}
