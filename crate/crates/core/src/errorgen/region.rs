use crate::orthography::{BaseVowel, Modifier, Syllable, Tone};

/// Pronunciation-driven respellings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionRule {
    OnsetChToTr,
    OnsetTrToCh,
    OnsetCToK,
    OnsetKToC,
    OnsetGToGi,
    OnsetGiToG,
    OnsetNghToNg,
    OnsetNgToNgh,
    CodaNToNg,
    CodaNgToN,
    CodaNhToN,
    ToneHoiToNga,
    ToneNgaToHoi,
}

impl RegionRule {
    pub const ALL: [RegionRule; 13] = [
        RegionRule::OnsetChToTr,
        RegionRule::OnsetTrToCh,
        RegionRule::OnsetCToK,
        RegionRule::OnsetKToC,
        RegionRule::OnsetGToGi,
        RegionRule::OnsetGiToG,
        RegionRule::OnsetNghToNg,
        RegionRule::OnsetNgToNgh,
        RegionRule::CodaNToNg,
        RegionRule::CodaNgToN,
        RegionRule::CodaNhToN,
        RegionRule::ToneHoiToNga,
        RegionRule::ToneNgaToHoi,
    ];

    fn onset_swap(self) -> Option<(&'static str, &'static str)> {
        Some(match self {
            RegionRule::OnsetChToTr => ("ch", "tr"),
            RegionRule::OnsetTrToCh => ("tr", "ch"),
            RegionRule::OnsetCToK => ("c", "k"),
            RegionRule::OnsetKToC => ("k", "c"),
            RegionRule::OnsetGToGi => ("g", "gi"),
            RegionRule::OnsetGiToG => ("gi", "g"),
            RegionRule::OnsetNghToNg => ("ngh", "ng"),
            RegionRule::OnsetNgToNgh => ("ng", "ngh"),
            _ => return None,
        })
    }

    fn coda_swap(self) -> Option<(&'static str, &'static str)> {
        Some(match self {
            RegionRule::CodaNToNg => ("n", "ng"),
            RegionRule::CodaNgToN => ("ng", "n"),
            RegionRule::CodaNhToN => ("nh", "n"),
            _ => return None,
        })
    }

    pub fn applies_to(self, s: &Syllable) -> bool {
        if let Some((from, _)) = self.onset_swap() {
            if s.onset != from {
                return false;
            }
            // `g` + `i...` would read back as a `gi` onset.
            let starts_with_i = s
                .vowels
                .first()
                .is_some_and(|v| v.base() == BaseVowel::I && v.modifier() == Modifier::None);
            return !(self == RegionRule::OnsetGToGi && starts_with_i);
        }
        if let Some((from, _)) = self.coda_swap() {
            return s.coda == from;
        }
        match self {
            RegionRule::ToneHoiToNga => s.tone == Tone::Hoi,
            RegionRule::ToneNgaToHoi => s.tone == Tone::Nga,
            _ => unreachable!(),
        }
    }

    /// Apply the rule; the caller checks [`RegionRule::applies_to`] first.
    pub fn apply(self, s: &Syllable) -> Syllable {
        if let Some((_, to)) = self.onset_swap() {
            return s.respelled(to, &s.coda);
        }
        if let Some((_, to)) = self.coda_swap() {
            return s.respelled(&s.onset, to);
        }
        let mut out = s.clone();
        out.tone = match self {
            RegionRule::ToneHoiToNga => Tone::Nga,
            _ => Tone::Hoi,
        };
        out
    }
}

pub fn applicable_rules(s: &Syllable) -> Vec<RegionRule> {
    RegionRule::ALL
        .iter()
        .copied()
        .filter(|r| r.applies_to(s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthography::{parse_syllable, render};

    fn apply(w: &str, r: RegionRule) -> String {
        let s = parse_syllable(w).unwrap();
        assert!(r.applies_to(&s), "{r:?} on {w}");
        render(&r.apply(&s))
    }

    #[test]
    fn table_examples() {
        assert_eq!(apply("tranh", RegionRule::OnsetTrToCh), "chanh");
        assert_eq!(apply("Tranh", RegionRule::OnsetTrToCh), "Chanh");
        assert_eq!(apply("Nghỉ", RegionRule::ToneHoiToNga), "Nghĩ");
        assert_eq!(apply("lạnh", RegionRule::CodaNhToN), "lạn");
        assert_eq!(apply("nghe", RegionRule::OnsetNghToNg), "nge");
        assert_eq!(apply("giữa", RegionRule::OnsetGiToG), "gữa");
        assert_eq!(apply("bàn", RegionRule::CodaNToNg), "bàng");
    }

    #[test]
    fn results_reparse_to_themselves() {
        for w in ["chào", "trường", "cá", "kể", "gà", "giá", "ngày", "nghĩ", "bạn", "sông", "nhanh"] {
            let s = parse_syllable(w).unwrap();
            for r in applicable_rules(&s) {
                let out = r.apply(&s);
                let text = render(&out);
                assert_ne!(text, w);
                assert_eq!(render(&parse_syllable(&text).unwrap()), text, "{w} {r:?}");
            }
        }
    }

    #[test]
    fn g_before_i_is_left_alone() {
        let s = parse_syllable("gì").unwrap();
        assert!(!RegionRule::OnsetGToGi.applies_to(&s));
        assert!(applicable_rules(&parse_syllable("xem").unwrap()).is_empty());
    }
}
