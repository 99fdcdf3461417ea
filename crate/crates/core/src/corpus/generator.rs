//! Template grammar producing clean everyday Vietnamese sentences.
//!
//! Used to build the bundled sample and the toy experiment corpus when no
//! crawled text is at hand. Output is a pure function of the seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUBJECTS: &[&str] = &[
    "tôi", "chúng tôi", "chúng ta", "anh ấy", "chị ấy", "em gái tôi", "anh trai tôi",
    "mọi người", "bạn tôi", "mẹ tôi", "bố tôi", "ông bà tôi", "các bạn học sinh",
    "những người hàng xóm", "thầy giáo", "cô giáo", "bác sĩ", "nhiều sinh viên",
    "gia đình tôi", "chồng tôi", "vợ tôi", "người bạn cũ", "cậu bé", "cô gái ấy",
    "ông chủ", "nhân viên mới", "đứa trẻ", "chị gái của tôi", "người lái xe",
    "bà cụ", "giám đốc", "học sinh lớp năm", "kỹ sư trẻ", "người nông dân",
    "các cầu thủ", "cả nhà", "hai đứa nhỏ", "người khách lạ", "bạn",
];

const PERSONS: &[&str] = &[
    "mẹ", "bố", "bạn bè", "thầy giáo", "cô giáo", "anh trai", "chị gái", "em trai",
    "ông nội", "bà ngoại", "hàng xóm", "đồng nghiệp", "người yêu", "vợ", "chồng",
    "khách hàng", "bác sĩ", "mọi người", "cả lớp", "giám đốc",
];

const THINGS: &[&str] = &[
    "một quyển sách", "cái bàn mới", "chiếc xe đạp", "một bó hoa", "cái áo khoác",
    "đôi giày", "chiếc điện thoại", "cái máy tính", "một con cá", "hai cân gạo",
    "một ít trái cây", "bức tranh", "chiếc đồng hồ", "tờ báo", "cái ghế gỗ",
    "một chai nước", "quả cam", "cái nón lá", "chiếc khăn", "vé xem phim",
    "bánh mì", "một ly cà phê", "đồ chơi", "cây bút", "cuốn vở",
];

const FOODS: &[&str] = &[
    "phở bò", "cơm tấm", "bún chả", "bánh cuốn", "cháo gà", "canh chua",
    "rau muống", "thịt kho", "cá chiên", "bánh xèo", "gỏi cuốn", "chè đậu",
    "trứng luộc", "mì quảng", "bún riêu", "xôi gấc",
];

const PLACES: &[&str] = &[
    "Hà Nội", "Sài Gòn", "Đà Nẵng", "Huế", "Cần Thơ", "Hải Phòng", "Nha Trang",
    "trường học", "công ty", "bệnh viện", "chợ", "thư viện", "công viên",
    "nhà ga", "sân bay", "bờ biển", "quê nhà", "thành phố", "nhà hàng",
    "siêu thị", "bưu điện", "ngân hàng", "quán cà phê", "văn phòng", "trung tâm",
];

const TIMES: &[&str] = &[
    "hôm nay", "hôm qua", "ngày mai", "sáng nay", "tối qua", "chiều nay",
    "tuần trước", "tuần sau", "năm ngoái", "bây giờ", "mỗi ngày", "tối nay",
    "sáng sớm", "cuối tuần", "đêm qua", "tháng trước", "dạo này", "lúc nãy",
    "trưa nay", "hằng năm",
];

const MOTIONS: &[&str] = &["đi", "đến", "về", "ghé", "chạy ra", "trở lại", "đi bộ đến"];

const OBJECT_VERBS: &[&str] = &[
    "mua", "bán", "tìm", "làm mất", "nhận được", "mang theo", "sửa", "cho mượn",
    "tặng", "cầm", "để quên", "chọn", "giữ", "đổi", "lau", "xếp",
];

const PERSON_VERBS: &[&str] = &[
    "gặp", "gọi điện thoại cho", "nói chuyện với", "giúp đỡ", "chờ", "nhớ",
    "hỏi thăm", "viết thư cho", "đi chơi với", "cảm ơn", "tin tưởng", "thương",
    "chăm sóc", "học cùng", "làm việc với", "nhắn tin cho",
];

const STATES: &[&str] = &[
    "rất vui", "hơi mệt", "không được khỏe", "rất bận", "khá buồn", "bình thường",
    "lo lắng", "hạnh phúc", "rất đói", "chán quá", "hài lòng", "ngạc nhiên",
    "rất giận", "yên tâm", "bối rối", "thoải mái", "căng thẳng", "tự tin",
];

const ADVERBS: &[&str] = &[
    "", "", "", "đã", "sẽ", "đang", "vẫn", "thường", "không", "chưa", "cũng", "lại",
    "vừa mới", "định", "muốn", "phải", "không muốn", "rất thích", "hay",
];

const REASONS: &[&str] = &[
    "vì trời mưa to", "vì không có thời gian", "vì muốn gặp bạn bè",
    "vì công việc quá nhiều", "vì đường bị kẹt xe", "vì sắp đến kỳ thi",
    "vì nhà ở rất xa", "vì thời tiết lạnh", "vì được nghỉ học", "vì giá rẻ",
    "để chuẩn bị cho ngày lễ", "để học tiếng anh", "để kiếm thêm tiền",
    "để thăm người thân", "để nghỉ ngơi", "cho kịp giờ",
];

const CONNECTORS: &[&str] = &["nhưng", "và", "nên", "rồi", "sau đó", "trong khi", "còn"];

const OPINIONS: &[&str] = &[
    "ví dụ như", "theo tôi", "thật ra", "nói chung", "có lẽ", "dĩ nhiên",
    "chắc chắn", "may mắn là", "tiếc là", "thông thường",
];

const TOPICS: &[&str] = &[
    "chuyện học hành", "kế hoạch du lịch", "giá xăng", "thời tiết", "bóng đá",
    "sức khỏe", "công việc mới", "chính trị", "âm nhạc", "món ăn ngon",
    "tình hình giao thông", "cuộc sống ở thành phố", "trận đấu tối qua",
    "bài kiểm tra", "chuyến đi chơi",
];

const QUANTITIES: &[&str] = &["hai", "ba", "bốn", "năm", "sáu", "bảy", "tám", "chín", "mười", "vài", "nhiều"];

const UNITS: &[&str] = &["ngày", "tuần", "tháng", "năm", "giờ", "lần", "người", "cuốn sách", "cái bánh"];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or_default()
}

fn push(out: &mut Vec<String>, phrase: &str) {
    out.extend(phrase.split_whitespace().map(str::to_string));
}

fn place<R: Rng + ?Sized>(rng: &mut R) -> String {
    let p = pick(rng, PLACES);
    let prep = pick(rng, &["ở", "tại", "gần", "trong"]);
    format!("{prep} {p}")
}

/// One clause as a list of words (no punctuation).
fn clause<R: Rng + ?Sized>(rng: &mut R, subject: bool) -> Vec<String> {
    let mut w = Vec::new();
    if subject {
        push(&mut w, pick(rng, SUBJECTS));
    }
    let adverb = pick(rng, ADVERBS);
    match rng.gen_range(0..7) {
        0 => {
            push(&mut w, adverb);
            push(&mut w, pick(rng, MOTIONS));
            push(&mut w, pick(rng, PLACES));
        }
        1 => {
            push(&mut w, adverb);
            push(&mut w, pick(rng, OBJECT_VERBS));
            push(&mut w, pick(rng, THINGS));
        }
        2 => {
            push(&mut w, adverb);
            push(&mut w, pick(rng, PERSON_VERBS));
            push(&mut w, pick(rng, PERSONS));
        }
        3 => {
            push(&mut w, pick(rng, &["", "cảm thấy", "trông", "vẫn"]));
            push(&mut w, pick(rng, STATES));
        }
        4 => {
            push(&mut w, pick(rng, &["ăn", "nấu", "thích ăn", "gọi một tô", "muốn ăn"]));
            push(&mut w, pick(rng, FOODS));
        }
        5 => {
            push(&mut w, pick(rng, &["nói về", "kể về", "hỏi về", "lo về", "nghĩ về"]));
            push(&mut w, pick(rng, TOPICS));
        }
        _ => {
            push(&mut w, pick(rng, &["đã ở đó", "làm việc", "chờ", "học", "ở lại"]));
            if rng.gen_bool(0.3) {
                w.push(rng.gen_range(2..30).to_string());
            } else {
                push(&mut w, pick(rng, QUANTITIES));
            }
            push(&mut w, pick(rng, UNITS));
        }
    }
    if rng.gen_bool(0.3) {
        push(&mut w, &place(rng));
    }
    w
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Render words into a sentence with capitalised first word.
fn finish(mut words: Vec<String>, end: &str) -> String {
    if let Some(first) = words.first_mut() {
        *first = capitalize(first);
    }
    let mut s = words.join(" ");
    // Commas were stored as their own words.
    s = s.replace(" ,", ",");
    s.push_str(end);
    s
}

/// One sentence of roughly `min_words..=max_words` words.
pub fn sentence<R: Rng + ?Sized>(rng: &mut R, min_words: usize, max_words: usize) -> String {
    loop {
        let mut words = Vec::new();
        if rng.gen_bool(0.25) {
            push(&mut words, pick(rng, TIMES));
            if rng.gen_bool(0.5) {
                words.push(",".into());
            }
        } else if rng.gen_bool(0.1) {
            push(&mut words, pick(rng, OPINIONS));
            words.push(",".into());
        }
        words.extend(clause(rng, true));
        let question = rng.gen_bool(0.1);
        while words.len() < min_words || (words.len() < max_words && rng.gen_bool(0.35)) {
            let connector = pick(rng, CONNECTORS);
            if rng.gen_bool(0.5) {
                words.push(",".into());
            }
            push(&mut words, connector);
            match rng.gen_range(0..3) {
                0 => push(&mut words, pick(rng, REASONS)),
                1 => words.extend(clause(rng, false)),
                _ => words.extend(clause(rng, true)),
            }
        }
        if question {
            push(&mut words, pick(rng, &["không", "phải không", "chưa", "à"]));
        }
        let count = words.iter().filter(|w| *w != ",").count();
        if (min_words..=max_words).contains(&count) {
            return finish(words, if question { "?" } else { "." });
        }
    }
}

/// `n` sentences with word counts in `min_words..=max_words`, deterministic
/// in `seed`. Duplicates are possible; callers that need unique sentences
/// deduplicate.
pub fn generate_sentences(seed: u64, n: usize, min_words: usize, max_words: usize) -> Vec<String> {
    assert!(min_words <= max_words && max_words >= 3, "unsatisfiable word bounds");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng, min_words, max_words)).collect()
}

/// `n` distinct sentences.
pub fn generate_unique_sentences(seed: u64, n: usize, min_words: usize, max_words: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = sentence(&mut rng, min_words, max_words);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthography::{normalize, tokenize_sentence};

    #[test]
    fn vocabulary_is_well_formed() {
        let lists = [
            SUBJECTS, PERSONS, THINGS, FOODS, PLACES, TIMES, MOTIONS, OBJECT_VERBS,
            PERSON_VERBS, STATES, ADVERBS, REASONS, CONNECTORS, OPINIONS, TOPICS, QUANTITIES, UNITS,
        ];
        for list in lists {
            for phrase in list {
                assert_eq!(normalize(phrase), *phrase);
                for w in phrase.split_whitespace() {
                    let t = tokenize_sentence(w);
                    assert!(t[0].is_syllable(), "{w}");
                }
            }
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = generate_sentences(1, 200, 5, 20);
        assert_eq!(a, generate_sentences(1, 200, 5, 20));
        assert_ne!(a, generate_sentences(2, 200, 5, 20));
        for s in &a {
            let n = s.split_whitespace().count();
            assert!((5..=20).contains(&n), "{s}");
        }
        let long = generate_sentences(3, 20, 50, 60);
        for s in &long {
            assert!((50..=60).contains(&s.split_whitespace().count()));
        }
    }

    #[test]
    fn unique_sentences() {
        let s = generate_unique_sentences(5, 2000, 5, 25);
        let set: std::collections::HashSet<_> = s.iter().collect();
        assert_eq!(set.len(), 2000);
    }
}
