//! Punctuation-delimited scope analysis: split instances by whether the
//! scope boundary sits on (or next to) the nearest punctuation-bearing word
//! around the cue, then report PCS on each half.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{NegationInstance, Sentence};
use crate::eval::{pair_instances, EvalError, Ratio, ScopeMatching};

#[derive(Debug, thiserror::Error)]
pub enum PunctError {
    #[error("instance has no cue words")]
    NoCue,
    #[error("instance has an empty scope")]
    EmptyScope,
    #[error("symbol set is empty")]
    EmptySymbols,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolSet(BTreeSet<char>);

impl SymbolSet {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Result<Self, PunctError> {
        let set: BTreeSet<char> = chars.into_iter().collect();
        if set.is_empty() {
            return Err(PunctError::EmptySymbols);
        }
        Ok(Self(set))
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    pub fn matches(&self, word: &str) -> bool {
        word.chars().any(|c| self.contains(c))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_string(&self) -> String {
        self.0.iter().collect()
    }
}

impl Default for SymbolSet {
    /// The 32 ASCII punctuation characters.
    fn default() -> Self {
        Self((0u8..128).map(char::from).filter(char::is_ascii_punctuation).collect())
    }
}

impl FromStr for SymbolSet {
    type Err = PunctError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SymbolSet::new(s.chars())
    }
}

/// Nearest punctuation-bearing word before the first cue word and after
/// the last one.
pub fn p_indices(sentence: &Sentence, instance: &NegationInstance, symbols: &SymbolSet) -> (Option<usize>, Option<usize>) {
    let (Some(first), Some(last)) = (instance.cue.first_word(), instance.cue.last_word()) else {
        return (None, None);
    };
    let has = |i: &usize| symbols.matches(&sentence.words[*i].surface);
    let p_first = (0..first).rev().find(has);
    let p_last = (last + 1..sentence.len()).find(has);
    (p_first, p_last)
}

pub fn is_punct_delimited(
    sentence: &Sentence,
    instance: &NegationInstance,
    symbols: &SymbolSet,
) -> Result<bool, PunctError> {
    if instance.cue.parts.is_empty() {
        return Err(PunctError::NoCue);
    }
    let (Some(&lo), Some(&hi)) = (instance.scope.first(), instance.scope.last()) else {
        return Err(PunctError::EmptyScope);
    };
    let (p_first, p_last) = p_indices(sentence, instance, symbols);
    let first_ok = p_first.is_some_and(|p| p == lo || p + 1 == lo);
    let last_ok = p_last.is_some_and(|p| p == hi || p == hi + 1);
    Ok(first_ok || last_ok)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PunctClass {
    Punct,
    NoPunct,
    /// Empty scope: belongs to neither sub-corpus.
    Excluded,
}

pub fn classify(sentence: &Sentence, instance: &NegationInstance, symbols: &SymbolSet) -> Result<PunctClass, PunctError> {
    match is_punct_delimited(sentence, instance, symbols) {
        Ok(true) => Ok(PunctClass::Punct),
        Ok(false) => Ok(PunctClass::NoPunct),
        Err(PunctError::EmptyScope) => Ok(PunctClass::Excluded),
        Err(e) => Err(e),
    }
}

/// `(sentence, instance)` index pairs of each sub-corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PunctSplit {
    pub punct: Vec<(usize, usize)>,
    pub nopunct: Vec<(usize, usize)>,
    pub excluded: Vec<(usize, usize)>,
}

pub fn punct_split(sentences: &[Sentence], symbols: &SymbolSet) -> Result<PunctSplit, PunctError> {
    let mut split = PunctSplit::default();
    for (si, s) in sentences.iter().enumerate() {
        for (ii, inst) in s.instances.iter().enumerate() {
            match classify(s, inst, symbols)? {
                PunctClass::Punct => split.punct.push((si, ii)),
                PunctClass::NoPunct => split.nopunct.push((si, ii)),
                PunctClass::Excluded => split.excluded.push((si, ii)),
            }
        }
    }
    Ok(split)
}

/// Keep only the instances of one class; sentences left without any
/// instance are dropped.
pub fn subcorpus(sentences: &[Sentence], symbols: &SymbolSet, class: PunctClass) -> Result<Vec<Sentence>, PunctError> {
    let mut out = Vec::new();
    for s in sentences {
        let mut kept = s.clone();
        kept.instances.clear();
        for inst in &s.instances {
            if classify(s, inst, symbols)? == class {
                kept.instances.push(inst.clone());
            }
        }
        if !kept.instances.is_empty() {
            out.push(kept);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubReport {
    pub instances: usize,
    pub correct: usize,
    /// Percentage.
    pub pcs: Ratio,
}

impl SubReport {
    fn new(correct: usize, instances: usize) -> Self {
        let r = Ratio::of(correct, instances);
        Self {
            instances,
            correct,
            pcs: Ratio {
                value: r.value * 100.0,
                undefined: r.undefined,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PunctReport {
    pub corpus: String,
    pub symbols: String,
    pub punct: SubReport,
    pub nopunct: SubReport,
    pub overall: SubReport,
    pub excluded_empty_scope: usize,
}

impl PunctReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>9} {:>9}", "subcorpus", "instances", "PCS");
        for (name, r) in [("punct", &self.punct), ("no-punct", &self.nopunct)] {
            let pcs = if r.pcs.undefined {
                "n/a".to_string()
            } else {
                format!("{:.2}", r.pcs.value)
            };
            let _ = writeln!(out, "{name:<10} {:>9} {pcs:>9}", r.instances);
        }
        if self.excluded_empty_scope > 0 {
            let _ = writeln!(out, "({} instances with empty scope excluded)", self.excluded_empty_scope);
        }
        out
    }
}

/// PCS of `pred` against `gold` on each sub-corpus. Predictions are paired
/// with gold instances by cue words; an unpaired gold instance is wrong.
pub fn punct_pcs_report(gold: &[Sentence], pred: &[Sentence], symbols: &SymbolSet) -> Result<PunctReport, PunctError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Argument(format!("{} gold sentences but {} predicted", gold.len(), pred.len())).into());
    }
    let (mut p_ok, mut p_n, mut n_ok, mut n_n, mut excluded) = (0, 0, 0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        for (gi, pi) in pair_instances(g, p, ScopeMatching::PredictedCue)? {
            let Some(gi) = gi else { continue };
            let correct = pi.is_some_and(|pi| pi.scope == gi.scope) as usize;
            match classify(g, gi, symbols)? {
                PunctClass::Punct => {
                    p_n += 1;
                    p_ok += correct;
                }
                PunctClass::NoPunct => {
                    n_n += 1;
                    n_ok += correct;
                }
                PunctClass::Excluded => excluded += 1,
            }
        }
    }
    Ok(PunctReport {
        corpus: gold.first().map(|s| s.source.corpus.clone()).unwrap_or_default(),
        symbols: symbols.as_string(),
        punct: SubReport::new(p_ok, p_n),
        nopunct: SubReport::new(n_ok, n_n),
        overall: SubReport::new(p_ok + n_ok, p_n + n_n),
        excluded_empty_scope: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Cue;

    fn example() -> (Sentence, NegationInstance) {
        let inst = NegationInstance::new(Cue::normal(5), 3..=7, true);
        let s = Sentence::from_words(&["He", "said", ",", "this", "is", "not", "a", "negation", "."]).with_instance(inst.clone());
        (s, inst)
    }

    #[test]
    fn default_symbols() {
        let s = SymbolSet::default();
        assert_eq!(s.len(), 32);
        assert_eq!(s.as_string(), "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~");
        assert!(SymbolSet::new([]).is_err());
    }

    #[test]
    fn worked_example() {
        let (s, inst) = example();
        let sym = SymbolSet::default();
        assert_eq!(p_indices(&s, &inst, &sym), (Some(2), Some(8)));
        assert!(is_punct_delimited(&s, &inst, &sym).unwrap());
    }

    #[test]
    fn no_punctuation() {
        let inst = NegationInstance::new(Cue::normal(0), [1, 2], true);
        let s = Sentence::from_words(&["not", "a", "problem"]).with_instance(inst.clone());
        assert_eq!(p_indices(&s, &inst, &SymbolSet::default()), (None, None));
        assert!(!is_punct_delimited(&s, &inst, &SymbolSet::default()).unwrap());
    }

    #[test]
    fn boundary_one_past_scope_end() {
        let inst = NegationInstance::new(Cue::normal(1), [1, 2], true);
        let s = Sentence::from_words(&["I", "cannot", "go", "today", "."]).with_instance(inst.clone());
        // P_last = 4, max(scope) + 1 = 3: not delimited
        assert!(!is_punct_delimited(&s, &inst, &SymbolSet::default()).unwrap());
        let inst = NegationInstance::new(Cue::normal(1), [1, 2, 3], true);
        assert!(is_punct_delimited(&s, &inst, &SymbolSet::default()).unwrap());
    }

    #[test]
    fn empty_scope_is_excluded() {
        let inst = NegationInstance::new(Cue::normal(0), [], true);
        let s = Sentence::from_words(&["no", "."]).with_instance(inst.clone());
        assert!(matches!(is_punct_delimited(&s, &inst, &SymbolSet::default()), Err(PunctError::EmptyScope)));
        let r = punct_pcs_report(std::slice::from_ref(&s), std::slice::from_ref(&s), &SymbolSet::default()).unwrap();
        assert_eq!(r.excluded_empty_scope, 1);
        assert!(r.punct.pcs.undefined && r.nopunct.pcs.undefined);
    }

    #[test]
    fn perfect_predictions_score_100() {
        let (s, _) = example();
        let plain = Sentence::from_words(&["not", "a", "problem"]).with_instance(NegationInstance::new(Cue::normal(0), [1, 2], true));
        let gold = vec![s, plain];
        let r = punct_pcs_report(&gold, &gold, &SymbolSet::default()).unwrap();
        assert_eq!((r.punct.pcs.value, r.nopunct.pcs.value), (100.0, 100.0));
        assert_eq!(r.punct.instances + r.nopunct.instances, 2);
        assert!(r.to_table().contains("no-punct"));
    }
}
