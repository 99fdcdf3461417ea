//! Frequency-ranked edit-distance correction.

use vietspell::baseline::{correct_baseline, FrequencyLexicon};
use vietspell::corpus;

fn main() {
    let clean = corpus::generate_unique_sentences(1, 2000, 5, 15);
    let lexicon = FrequencyLexicon::build(&clean).unwrap();
    println!("{} words in the lexicon", lexicon.len());
    for word in ["nguoi", "truờng", "hocj", "Vieejt"] {
        println!("{word}: {:?}", lexicon.candidates(word, 2).into_iter().take(3).collect::<Vec<_>>());
    }
    println!("{}", correct_baseline("tooi ddi hojc ở truờng", &lexicon));
}
