//! Beam search over a hand-written scorer, where greedy decoding misses
//! the best sequence.

use vietspell::search::{beam_search, greedy, StepScorer};

/// Token 1 looks best first but leads to a poor continuation.
struct Trap;

impl StepScorer for Trap {
    type State = Vec<usize>;

    fn start(&self) -> Vec<usize> {
        Vec::new()
    }

    fn step(&self, prefix: &mut Vec<usize>, token: usize) -> Vec<f64> {
        prefix.push(token);
        let p: [f64; 3] = match prefix.as_slice() {
            [_] => [0.05, 0.5, 0.45],
            [_, 1] => [0.4, 0.3, 0.3],
            [_, 2] => [0.95, 0.025, 0.025],
            _ => [0.9, 0.05, 0.05],
        };
        p.iter().map(|x| x.ln()).collect()
    }

    fn bos(&self) -> usize {
        0
    }

    fn eos(&self) -> usize {
        0
    }
}

fn main() {
    let g = greedy(&Trap, 5);
    println!("greedy: {:?} score {:.3}", g.tokens, g.normalized());
    for k in [1, 2, 5] {
        let b = beam_search(&Trap, k, 5);
        println!("beam {k}: {:?} score {:.3}", b.tokens, b.normalized());
    }
}
