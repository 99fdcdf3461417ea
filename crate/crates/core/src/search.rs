//! Greedy and length-normalized beam search over any autoregressive
//! scorer.

use std::cmp::Ordering;

/// An autoregressive model seen one token at a time.
pub trait StepScorer {
    type State: Clone;

    /// State before any token has been fed.
    fn start(&self) -> Self::State;

    /// Feed `token` and return log-probabilities of the next token.
    fn step(&self, state: &mut Self::State, token: usize) -> Vec<f64>;

    fn bos(&self) -> usize;
    fn eos(&self) -> usize;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens; the last one is EOS iff `finished`.
    pub tokens: Vec<usize>,
    /// Sum of the per-step log-probabilities.
    pub score: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Score divided by the number of generated tokens.
    pub fn normalized(&self) -> f64 {
        if self.tokens.is_empty() {
            self.score
        } else {
            self.score / self.tokens.len() as f64
        }
    }

    /// Tokens without the trailing EOS.
    pub fn content(&self) -> &[usize] {
        if self.finished {
            &self.tokens[..self.tokens.len() - 1]
        } else {
            &self.tokens
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Argmax rollout until EOS or `max_len` tokens.
pub fn greedy<S: StepScorer>(scorer: &S, max_len: usize) -> Hypothesis {
    let mut state = scorer.start();
    let mut token = scorer.bos();
    let mut hyp = Hypothesis {
        tokens: Vec::new(),
        score: 0.0,
        finished: false,
    };
    while hyp.tokens.len() < max_len {
        let logp = scorer.step(&mut state, token);
        token = argmax(&logp);
        hyp.score += logp[token];
        hyp.tokens.push(token);
        if token == scorer.eos() {
            hyp.finished = true;
            break;
        }
    }
    hyp
}

/// Beam search keeping `beam` live hypotheses ranked by cumulative score.
/// A candidate ending in EOS is retired when it ranks within the top
/// `beam`; the search stops once `beam` hypotheses are retired or
/// `max_len` is reached. The winner is the best length-normalized
/// hypothesis among the retired ones, the survivors at `max_len` and the
/// greedy rollout.
pub fn beam_search<S: StepScorer>(scorer: &S, beam: usize, max_len: usize) -> Hypothesis {
    assert!(beam >= 1, "beam must be at least 1");
    let greedy_hyp = greedy(scorer, max_len);
    if beam == 1 {
        return greedy_hyp;
    }
    let eos = scorer.eos();
    let mut alive: Vec<(S::State, Hypothesis, usize)> = vec![(
        scorer.start(),
        Hypothesis {
            tokens: Vec::new(),
            score: 0.0,
            finished: false,
        },
        scorer.bos(),
    )];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for _ in 0..max_len {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        let mut states = Vec::with_capacity(alive.len());
        for (h, (state, hyp, last)) in alive.iter_mut().enumerate() {
            let logp = scorer.step(state, *last);
            candidates.extend(logp.iter().enumerate().map(|(tok, &lp)| (hyp.score + lp, h, tok)));
            states.push(state.clone());
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut next = Vec::with_capacity(beam);
        for (rank, &(score, h, tok)) in candidates.iter().enumerate() {
            if next.len() == beam && rank >= beam {
                break;
            }
            let mut tokens = alive[h].1.tokens.clone();
            tokens.push(tok);
            if tok == eos {
                if rank < beam {
                    finished.push(Hypothesis {
                        tokens,
                        score,
                        finished: true,
                    });
                }
            } else if next.len() < beam {
                next.push((
                    states[h].clone(),
                    Hypothesis {
                        tokens,
                        score,
                        finished: false,
                    },
                    tok,
                ));
            }
        }
        alive = next;
        if finished.len() >= beam || alive.is_empty() {
            break;
        }
    }
    let survivors = alive
        .into_iter()
        .filter(|(_, h, _)| h.tokens.len() >= max_len)
        .map(|(_, h, _)| h);
    let mut best = greedy_hyp;
    for h in finished.into_iter().chain(survivors) {
        if h.normalized() > best.normalized() {
            best = h;
        }
    }
    best
}
