//! Inject synthetic spelling errors and replay them from their records.

use vietspell::errorgen::{CorruptionSpec, Corruptor, ErrorType};

fn main() {
    let sentence = "Hôm nay tôi đi học ở trường đại học bách khoa cùng với các bạn";
    let corruptor = Corruptor::new(CorruptionSpec {
        word_error_rate: 0.3,
        ..Default::default()
    })
    .expect("valid spec");
    for id in 0..3 {
        let (noisy, record) = corruptor.corrupt_sentence(id, sentence);
        println!("{noisy}");
        for e in &record.edits {
            println!("    {:<14} {:?} -> {:?}", e.error_type.name(), e.original, e.corrupted);
        }
        assert_eq!(record.apply(sentence).unwrap(), noisy);
    }
    for t in ErrorType::ALL {
        let only = Corruptor::new(CorruptionSpec {
            word_error_rate: 0.5,
            ..CorruptionSpec::only(t)
        })
        .unwrap();
        println!("{:<14} {}", t.name(), only.corrupt_sentence(7, sentence).0);
    }
}
