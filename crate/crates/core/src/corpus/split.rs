//! Seeded sentence-level train/dev/test partitioning.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Sentence};

const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios {
        train: 0.7,
        dev: 0.15,
        test: 0.15,
    };

    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, CorpusError> {
        let ratios = Self { train, dev, test };
        ratios.check()?;
        Ok(ratios)
    }

    fn check(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(CorpusError::Argument(format!("split ratios must be non-negative: {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(CorpusError::Argument(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<Sentence>,
    pub dev: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

impl Splits {
    pub fn parts(&self) -> [(Partition, &[Sentence]); 3] {
        [
            (Partition::Train, &self.train),
            (Partition::Dev, &self.dev),
            (Partition::Test, &self.test),
        ]
    }
}

/// Randomly partition sentences; deterministic for a fixed seed.
pub fn split_corpus(sentences: &[Sentence], ratios: SplitRatios, seed: u64) -> Result<Splits, CorpusError> {
    ratios.check()?;
    if sentences.is_empty() {
        return Err(CorpusError::Argument("cannot split an empty corpus".into()));
    }
    let n = sentences.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = ((ratios.train * n as f64).round() as usize).min(n);
    let n_dev = ((ratios.dev * n as f64).round() as usize).min(n - n_train);
    let n_test = if ratios.test == 0.0 { 0 } else { n - n_train - n_dev };
    // Any remainder from rounding with a zero test ratio goes to train.
    let n_train = n - n_dev - n_test;

    let pick = |idx: &[usize]| idx.iter().map(|&i| sentences[i].clone()).collect::<Vec<_>>();
    Ok(Splits {
        train: pick(&order[..n_train]),
        dev: pick(&order[n_train..n_train + n_dev]),
        test: pick(&order[n_train + n_dev..]),
        seed,
        ratios,
    })
}

/// Line-oriented manifest: one `corpus<TAB>document<TAB>sentence<TAB>partition` row per sentence.
pub fn write_split_manifest<W: Write>(mut out: W, splits: &Splits) -> std::io::Result<()> {
    let r = splits.ratios;
    writeln!(out, "# seed={} ratios={},{},{}", splits.seed, r.train, r.dev, r.test)?;
    for (partition, sentences) in splits.parts() {
        for s in sentences {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                s.source.corpus,
                s.source.document,
                s.source.sentence,
                partition.as_str()
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn corpus(n: usize) -> Vec<Sentence> {
        (0..n)
            .map(|i| {
                let mut s = Sentence::from_words(&["w"]);
                s.source.sentence = i;
                s
            })
            .collect()
    }

    fn ids(s: &[Sentence]) -> Vec<usize> {
        s.iter().map(|s| s.source.sentence).collect()
    }

    #[test]
    fn default_ratios_on_100() {
        let sp = split_corpus(&corpus(100), SplitRatios::DEFAULT, 7).unwrap();
        assert_eq!((sp.train.len(), sp.dev.len(), sp.test.len()), (70, 15, 15));
    }

    #[test]
    fn same_seed_same_partition() {
        let c = corpus(57);
        let a = split_corpus(&c, SplitRatios::DEFAULT, 11).unwrap();
        let b = split_corpus(&c, SplitRatios::DEFAULT, 11).unwrap();
        assert_eq!(a, b);
        let other = split_corpus(&c, SplitRatios::DEFAULT, 12).unwrap();
        assert_ne!(ids(&a.train), ids(&other.train));
    }

    #[test]
    fn everything_to_train() {
        let sp = split_corpus(&corpus(9), SplitRatios::new(1.0, 0.0, 0.0).unwrap(), 0).unwrap();
        assert_eq!((sp.train.len(), sp.dev.len(), sp.test.len()), (9, 0, 0));
    }

    #[test]
    fn bad_ratios_and_empty_corpus() {
        assert!(SplitRatios::new(0.7, 0.2, 0.2).is_err());
        let bad = SplitRatios { train: 0.5, dev: 0.5, test: 0.5 };
        assert!(split_corpus(&corpus(3), bad, 0).is_err());
        assert!(split_corpus(&[], SplitRatios::DEFAULT, 0).is_err());
    }

    #[test]
    fn manifest_lists_every_sentence() {
        let sp = split_corpus(&corpus(10), SplitRatios::DEFAULT, 3).unwrap();
        let mut out = Vec::new();
        write_split_manifest(&mut out, &sp).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# seed=3 "));
        assert_eq!(text.lines().count(), 11);
    }

    proptest! {
        #[test]
        fn parts_are_disjoint_and_exhaustive(n in 1usize..300, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let train = a;
            let dev = (1.0 - a) * b;
            let test = 1.0 - train - dev;
            let ratios = SplitRatios { train, dev, test };
            let sp = split_corpus(&corpus(n), ratios, seed).unwrap();
            let all: Vec<usize> = ids(&sp.train).into_iter().chain(ids(&sp.dev)).chain(ids(&sp.test)).collect();
            let set: BTreeSet<usize> = all.iter().copied().collect();
            prop_assert_eq!(all.len(), n);
            prop_assert_eq!(set, (0..n).collect::<BTreeSet<_>>());
        }
    }
}
