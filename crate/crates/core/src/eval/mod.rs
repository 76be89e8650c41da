//! Cue and scope metrics.

mod matrix;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{NegationInstance, Sentence};
use crate::encoding::{cue_labels, CueLabel, EncodingError};

pub use matrix::{
    cross_matrix, CrossMatrix, CuePredictor, EndToEndPredictor, GoldCueScopePredictor, Predictor,
};

/// Published scores used as reproduction targets.
pub mod reference {
    /// Scope F1, train and test on BioScope Abstracts.
    pub const SCOPE_F1_BIOSCOPE_ABSTRACTS: f64 = 95.68;
    /// Scope F1, train Abstracts, test Full Papers.
    pub const SCOPE_F1_ABSTRACTS_TO_FULL: f64 = 91.24;
    /// Scope F1, Sherlock train to Sherlock test.
    pub const SCOPE_F1_SHERLOCK: f64 = 92.36;
    /// Cue F1, train and test on BioScope Abstracts.
    pub const CUE_F1_BIOSCOPE_ABSTRACTS: f64 = 95.65;
    /// PCS on the SFU instances whose scope is not punctuation-delimited.
    pub const PCS_SFU_NO_PUNCT: f64 = 54.16;
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("prediction failed: {0}")]
    Prediction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Cue,
    /// Scope given gold cues.
    ScopeGold,
    /// Scope given predicted cues.
    ScopeEndToEnd,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Cue => "cue",
            EvalMode::ScopeGold => "scope-gold",
            EvalMode::ScopeEndToEnd => "scope-e2e",
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cue" => Ok(EvalMode::Cue),
            "scope-gold" => Ok(EvalMode::ScopeGold),
            "scope-e2e" => Ok(EvalMode::ScopeEndToEnd),
            other => Err(EvalError::Argument(format!("unknown evaluation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// A ratio that may have a zero denominator; undefined values read as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub undefined: bool,
}

impl Ratio {
    pub fn of(num: usize, den: usize) -> Self {
        if den == 0 {
            Ratio {
                value: 0.0,
                undefined: true,
            }
        } else {
            Ratio {
                value: num as f64 / den as f64,
                undefined: false,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub train_corpus: String,
    pub test_corpus: String,
    pub counts: Counts,
    /// In [0, 1].
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
    /// Percentage, scope modes only.
    pub pcs: Option<Ratio>,
    pub merge_affix: bool,
    pub n_sentences: usize,
    pub n_instances: usize,
}

impl EvalReport {
    fn from_counts(task: &str, counts: Counts, n_sentences: usize, n_instances: usize) -> Self {
        let precision = Ratio::of(counts.tp, counts.tp + counts.fp);
        let recall = Ratio::of(counts.tp, counts.tp + counts.fn_);
        let f1 = Ratio::of(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn_);
        Self {
            task: task.to_string(),
            train_corpus: String::new(),
            test_corpus: String::new(),
            counts,
            precision,
            recall,
            f1,
            pcs: None,
            merge_affix: false,
            n_sentences,
            n_instances,
        }
    }

    pub fn f1_percent(&self) -> f64 {
        self.f1.value * 100.0
    }
}

fn check_aligned(gold: &[Sentence], pred: &[Sentence]) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Argument(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != p.len() {
            return Err(EvalError::Argument(format!(
                "{}: gold has {} words, prediction {}",
                g.source,
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

/// Word-level comparison of cue label sequences.
pub fn cue_counts(gold: &[u8], pred: &[u8], merge_affix: bool) -> Counts {
    let none = CueLabel::None as u8;
    let norm = |l: u8| if merge_affix && l == CueLabel::Affix as u8 { CueLabel::Normal as u8 } else { l };
    let mut c = Counts::default();
    for (&g, &p) in gold.iter().zip(pred) {
        match (g < none, p < none) {
            (true, true) if norm(g) == norm(p) => c.tp += 1,
            (true, true) => {
                c.fp += 1;
                c.fn_ += 1;
            }
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => {}
        }
    }
    c
}

pub fn cue_prf(gold: &[Sentence], pred: &[Sentence], merge_affix: bool) -> Result<EvalReport, EvalError> {
    check_aligned(gold, pred)?;
    let mut counts = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        counts.add(cue_counts(&cue_labels(g)?, &cue_labels(p)?, merge_affix));
    }
    let n_instances = gold.iter().map(|s| s.instances.len()).sum();
    let mut report = EvalReport::from_counts(EvalMode::Cue.as_str(), counts, gold.len(), n_instances);
    report.merge_affix = merge_affix;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopeMatching {
    /// Predictions were made for the gold cues; every gold instance must
    /// have a prediction with the same cue words.
    GoldCue,
    /// Instances are paired by cue words; unpaired ones count as errors.
    PredictedCue,
}

fn cue_key(i: &NegationInstance) -> BTreeSet<usize> {
    i.cue.word_indices().collect()
}

pub(crate) type InstancePair<'a> = (Option<&'a NegationInstance>, Option<&'a NegationInstance>);

/// Pairs of (gold, predicted) instances within one sentence, by cue words.
pub(crate) fn pair_instances<'a>(
    g: &'a Sentence,
    p: &'a Sentence,
    matching: ScopeMatching,
) -> Result<Vec<InstancePair<'a>>, EvalError> {
    let mut used = vec![false; p.instances.len()];
    let mut pairs = Vec::new();
    for gi in &g.instances {
        let key = cue_key(gi);
        let found = p
            .instances
            .iter()
            .enumerate()
            .find(|(j, pi)| !used[*j] && cue_key(pi) == key);
        match found {
            Some((j, pi)) => {
                used[j] = true;
                pairs.push((Some(gi), Some(pi)));
            }
            None => pairs.push((Some(gi), None)),
        }
    }
    for (j, pi) in p.instances.iter().enumerate() {
        if !used[j] {
            pairs.push((None, Some(pi)));
        }
    }
    if matching == ScopeMatching::GoldCue && pairs.iter().any(|(a, b)| a.is_none() || b.is_none()) {
        return Err(EvalError::Argument(format!(
            "{}: predicted instances do not line up with the gold cues",
            g.source
        )));
    }
    Ok(pairs)
}

fn scope_counts(gold: &BTreeSet<usize>, pred: &BTreeSet<usize>) -> Counts {
    Counts {
        tp: gold.intersection(pred).count(),
        fp: pred.difference(gold).count(),
        fn_: gold.difference(pred).count(),
    }
}

/// Token-level in-scope P/R/F1 accumulated over instances, with PCS.
pub fn scope_token_prf(
    gold: &[Sentence],
    pred: &[Sentence],
    matching: ScopeMatching,
) -> Result<EvalReport, EvalError> {
    check_aligned(gold, pred)?;
    let empty = BTreeSet::new();
    let mut counts = Counts::default();
    let (mut exact, mut total) = (0usize, 0usize);
    for (g, p) in gold.iter().zip(pred) {
        for (gi, pi) in pair_instances(g, p, matching)? {
            let gs = gi.map_or(&empty, |i| &i.scope);
            let ps = pi.map_or(&empty, |i| &i.scope);
            counts.add(scope_counts(gs, ps));
            if gi.is_some() {
                total += 1;
                exact += (pi.is_some() && gs == ps) as usize;
            }
        }
    }
    let task = match matching {
        ScopeMatching::GoldCue => EvalMode::ScopeGold,
        ScopeMatching::PredictedCue => EvalMode::ScopeEndToEnd,
    };
    let mut report = EvalReport::from_counts(task.as_str(), counts, gold.len(), total);
    let pcs = Ratio::of(exact, total);
    report.pcs = Some(Ratio {
        value: pcs.value * 100.0,
        undefined: pcs.undefined,
    });
    Ok(report)
}

/// Percentage of gold instances whose predicted scope matches exactly.
/// Instances are paired by cue words; a gold instance without a
/// prediction counts as wrong.
pub fn pcs(gold: &[Sentence], pred: &[Sentence]) -> Result<Ratio, EvalError> {
    let report = scope_token_prf(gold, pred, ScopeMatching::PredictedCue)?;
    Ok(report.pcs.expect("scope reports carry PCS"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Cue;
    use proptest::prelude::*;

    fn with_scope(n: usize, cue: usize, scope: &[usize]) -> Sentence {
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        Sentence::from_words(&words).with_instance(NegationInstance::new(
            Cue::normal(cue),
            scope.iter().copied(),
            true,
        ))
    }

    #[test]
    fn cue_examples() {
        let c = cue_counts(&[3, 3, 1, 3], &[3, 3, 1, 3], false);
        assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 0));
        assert_eq!(cue_counts(&[0], &[1], true).tp, 1);
        assert_eq!(cue_counts(&[0], &[1], false), Counts { tp: 0, fp: 1, fn_: 1 });
        let c = cue_counts(&[1, 3], &[3, 1], false);
        assert_eq!((c.tp, c.fp, c.fn_), (0, 1, 1));
        let r = EvalReport::from_counts("cue", c, 1, 1);
        assert_eq!(r.f1.value, 0.0);
    }

    #[test]
    fn scope_examples() {
        let g = vec![with_scope(6, 0, &[2, 3])];
        let p = vec![with_scope(6, 0, &[3, 4])];
        let r = scope_token_prf(&g, &p, ScopeMatching::GoldCue).unwrap();
        assert_eq!((r.counts.tp, r.counts.fp, r.counts.fn_), (1, 1, 1));
        assert!((r.f1.value - 0.5).abs() < 1e-12);
        assert_eq!(r.pcs.unwrap().value, 0.0);
        let same = scope_token_prf(&g, &g, ScopeMatching::GoldCue).unwrap();
        assert_eq!(same.f1.value, 1.0);
        assert_eq!(same.pcs.unwrap().value, 100.0);

        let e = vec![with_scope(3, 0, &[])];
        let r = scope_token_prf(&e, &e, ScopeMatching::GoldCue).unwrap();
        assert_eq!(r.counts, Counts::default());
        assert!(r.f1.undefined && r.precision.undefined && r.recall.undefined);
    }

    #[test]
    fn pcs_counts_exact_instances() {
        let g: Vec<Sentence> = (0..4).map(|_| with_scope(5, 0, &[1, 2])).collect();
        let mut p = g.clone();
        p[3] = with_scope(5, 0, &[1, 2, 3]);
        assert_eq!(pcs(&g, &p).unwrap().value, 75.0);
        assert_eq!(pcs(&g, &g).unwrap().value, 100.0);
    }

    #[test]
    fn misalignment_is_an_argument_error() {
        let g = vec![with_scope(5, 0, &[1])];
        assert!(matches!(cue_prf(&g, &[], false), Err(EvalError::Argument(_))));
        let shorter = vec![with_scope(4, 0, &[1])];
        assert!(matches!(scope_token_prf(&g, &shorter, ScopeMatching::GoldCue), Err(EvalError::Argument(_))));
        let other_cue = vec![with_scope(5, 1, &[2])];
        assert!(scope_token_prf(&g, &other_cue, ScopeMatching::GoldCue).is_err());
        let r = scope_token_prf(&g, &other_cue, ScopeMatching::PredictedCue).unwrap();
        assert_eq!((r.counts.tp, r.counts.fp, r.counts.fn_), (0, 1, 1));
    }

    fn labels() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
        (1usize..40).prop_flat_map(|n| {
            (prop::collection::vec(0u8..4, n), prop::collection::vec(0u8..4, n))
        })
    }

    fn scope_pair() -> impl Strategy<Value = (BTreeSet<usize>, BTreeSet<usize>)> {
        (prop::collection::btree_set(0usize..20, 0..20), prop::collection::btree_set(0usize..20, 0..20))
    }

    proptest! {
        #[test]
        fn affix_merge_invariance((g, p) in labels(), flips in prop::collection::vec(any::<(bool, bool)>(), 40)) {
            let swap = |l: u8| match l { 0 => 1, 1 => 0, x => x };
            let g2: Vec<u8> = g.iter().zip(&flips).map(|(&l, f)| if f.0 { swap(l) } else { l }).collect();
            let p2: Vec<u8> = p.iter().zip(&flips).map(|(&l, f)| if f.1 { swap(l) } else { l }).collect();
            prop_assert_eq!(cue_counts(&g, &p, true), cue_counts(&g2, &p2, true));
        }

        #[test]
        fn self_comparison_is_perfect((g, _) in labels()) {
            let c = cue_counts(&g, &g, false);
            prop_assert_eq!(c.fp + c.fn_, 0);
        }

        #[test]
        fn fp_fn_symmetry((a, b) in scope_pair()) {
            let ab = scope_counts(&a, &b);
            let ba = scope_counts(&b, &a);
            prop_assert_eq!(ab.fp, ba.fn_);
            prop_assert_eq!(ab.fn_, ba.fp);
        }

        #[test]
        fn fixing_one_word_never_hurts((g, p) in scope_pair(), w in 0usize..20) {
            let mut fixed = p.clone();
            if g.contains(&w) { fixed.insert(w); } else { fixed.remove(&w); }
            let before = scope_counts(&g, &p);
            let after = scope_counts(&g, &fixed);
            let f1 = |c: Counts| Ratio::of(2 * c.tp, 2 * c.tp + c.fp + c.fn_).value;
            prop_assert!(f1(after) >= f1(before) || (after.fp + after.fn_ == 0));
            prop_assert!((fixed == g) as u8 >= (p == g) as u8);
        }
    }
}
