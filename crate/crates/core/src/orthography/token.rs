use std::ops::Deref;

use super::{parse_syllable, Syllable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    VietSyllable(Syllable),
    /// Numbers, punctuation, foreign or malformed words.
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Whitespace between the previous token (or start of text) and this one.
    pub space_before: String,
}

impl Token {
    pub fn syllable(&self) -> Option<&Syllable> {
        match &self.kind {
            TokenKind::VietSyllable(s) => Some(s),
            TokenKind::Other => None,
        }
    }

    pub fn is_syllable(&self) -> bool {
        matches!(self.kind, TokenKind::VietSyllable(_))
    }
}

/// Tokens of a sentence plus the whitespace that follows the last one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokens {
    pub tokens: Vec<Token>,
    pub trailing: String,
}

impl Tokens {
    /// Reassemble the original text.
    pub fn rebuild(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&t.space_before);
            out.push_str(&t.text);
        }
        out.push_str(&self.trailing);
        out
    }
}

impl Deref for Tokens {
    type Target = [Token];

    fn deref(&self) -> &[Token] {
        &self.tokens
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || unicode_normalization::char::is_combining_mark(c)
}

/// Split NFC text into word runs and single punctuation characters,
/// remembering the whitespace between them.
pub fn tokenize_sentence(text: &str) -> Tokens {
    let mut tokens = Vec::new();
    let mut space = String::new();
    let mut word = String::new();

    let flush = |word: &mut String, space: &mut String, tokens: &mut Vec<Token>| {
        if word.is_empty() {
            return;
        }
        let kind = match parse_syllable(word) {
            Ok(s) => TokenKind::VietSyllable(s),
            Err(_) => TokenKind::Other,
        };
        tokens.push(Token {
            text: std::mem::take(word),
            kind,
            space_before: std::mem::take(space),
        });
    };

    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut word, &mut space, &mut tokens);
            space.push(c);
        } else if is_word_char(c) {
            word.push(c);
        } else {
            flush(&mut word, &mut space, &mut tokens);
            tokens.push(Token {
                text: c.to_string(),
                kind: TokenKind::Other,
                space_before: std::mem::take(&mut space),
            });
        }
    }
    flush(&mut word, &mut space, &mut tokens);
    Tokens {
        tokens,
        trailing: space,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xin_chao() {
        let t = tokenize_sentence("Xin chào!");
        let texts: Vec<_> = t.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["Xin", "chào", "!"]);
        assert!(t[0].is_syllable());
        assert!(t[1].is_syllable());
        assert!(!t[2].is_syllable());
        assert_eq!(t.rebuild(), "Xin chào!");
    }

    #[test]
    fn empty_and_mixed() {
        assert!(tokenize_sentence("").is_empty());
        let t = tokenize_sentence("abc123");
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, TokenKind::Other);
    }

    #[test]
    fn keeps_surrounding_whitespace() {
        let s = "  Theo  bộ y tế,\tngày 3.5 ";
        assert_eq!(tokenize_sentence(s).rebuild(), s);
    }

    proptest! {
        #[test]
        fn tokenization_is_lossless(s in "[a-zA-Zàáạảãâầấậẩẫăằắặẳẵđêềếệểễôồốộổỗơờớợởỡưừứựửữ0-9 ,.!?`'\t-]{0,60}") {
            let s = crate::orthography::normalize(&s);
            prop_assert_eq!(tokenize_sentence(&s).rebuild(), s);
        }
    }
}
