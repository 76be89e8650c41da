//! Seeded toy corpora with fully deterministic negation patterns, for smoke
//! tests and examples that run without the real data.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Cue, NegationInstance, Sentence, SentenceSource, SubSpan};

const FILLERS: &[&str] = &[
    "the", "cat", "sat", "on", "mat", "dog", "ran", "home", "big", "red", "house", "was", "quite", "old",
    "we", "saw", "a", "small", "boat", "river",
];
const NORMAL_CUES: &[&str] = &["not", "no", "never", "without"];
const AFFIX_CUES: &[(&str, usize)] = &[("unhappy", 2), ("impossible", 2), ("careless", 4)];

/// Fillers plus at most one cue; the scope runs from the cue to the end,
/// final period excluded.
fn build(rng: &mut ChaCha8Rng, n: usize, corpus: &str) -> Sentence {
    let len = rng.random_range(4..10);
    let mut words: Vec<String> = (0..len).map(|_| FILLERS.choose(rng).expect("non-empty").to_string()).collect();
    let kind = rng.random_range(0..5);
    let at = rng.random_range(0..len - 1);
    let mut instance = None;
    match kind {
        0 | 1 => {
            words[at] = NORMAL_CUES.choose(rng).expect("non-empty").to_string();
            instance = Some(NegationInstance::new(Cue::normal(at), at + 1..len, false));
        }
        2 => {
            let (w, cut) = *AFFIX_CUES.choose(rng).expect("non-empty");
            words[at] = w.to_string();
            let span = if w.starts_with("care") {
                SubSpan::new(w.len() - cut, w.len())
            } else {
                SubSpan::new(0, cut)
            };
            let mut inst = NegationInstance::new(Cue::affix(at, Some(span)), at..len, false);
            let rest = if span.start == 0 {
                SubSpan::new(span.end, w.len())
            } else {
                SubSpan::new(0, span.start)
            };
            inst.scope_spans.insert(at, rest);
            instance = Some(inst);
        }
        3 if at + 2 < len => {
            let second = rng.random_range(at + 2..len);
            words[at] = "neither".into();
            words[second] = "nor".into();
            let scope = (at + 1..len).filter(|&i| i != second);
            instance = Some(NegationInstance::new(Cue::multiword([at, second]), scope, false));
        }
        _ => {}
    }
    words.push(".".into());
    let mut s = Sentence::from_words(&words);
    s.source = SentenceSource {
        corpus: corpus.to_string(),
        document: "synthetic".into(),
        sentence: n,
    };
    s.instances.extend(instance);
    s
}

/// `n` sentences; roughly four in five carry one negation.
pub fn negation_corpus(n: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| build(&mut rng, i, "synthetic")).collect()
}
