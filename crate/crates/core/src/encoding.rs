//! Label schemas, cue marking and subword alignment.

use std::fmt;
use std::io::{self, Write};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CueClass, NegationInstance, Sentence, SentenceSource};
use crate::tokenizer::{marker, Tokenizer};

pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, thiserror::Error)]
pub enum EncodingError {
    #[error("{source_id}: {msg}")]
    Data { source_id: SentenceSource, msg: String },
    #[error("{source_id}: {n_tokens} subword tokens exceed max_len {max_len}")]
    Overflow {
        source_id: SentenceSource,
        n_tokens: usize,
        max_len: usize,
    },
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Cue,
    Scope,
}

impl Task {
    pub fn n_classes(self) -> usize {
        match self {
            Task::Cue => 5,
            Task::Scope => 3,
        }
    }

    pub fn pad_label(self) -> u8 {
        match self {
            Task::Cue => CueLabel::Pad as u8,
            Task::Scope => ScopeLabel::Pad as u8,
        }
    }

    /// Classes counted as positives by the token-level dev F1.
    pub fn positive_classes(self) -> &'static [u8] {
        match self {
            Task::Cue => &[0, 1, 2],
            Task::Scope => &[1],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Cue => "cue",
            Task::Scope => "scope",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cue" => Ok(Task::Cue),
            "scope" => Ok(Task::Scope),
            other => Err(EncodingError::Argument(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CueLabel {
    Affix = 0,
    Normal = 1,
    Multi = 2,
    None = 3,
    Pad = 4,
}

impl CueLabel {
    pub fn of(class: CueClass) -> Self {
        match class {
            CueClass::Affix => CueLabel::Affix,
            CueClass::Normal => CueLabel::Normal,
            CueClass::Multiword => CueLabel::Multi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ScopeLabel {
    Out = 0,
    In = 1,
    Pad = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkStrategy {
    Replace,
    Augment,
}

impl MarkStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkStrategy::Replace => "replace",
            MarkStrategy::Augment => "augment",
        }
    }
}

impl fmt::Display for MarkStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MarkStrategy {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replace" => Ok(MarkStrategy::Replace),
            "augment" => Ok(MarkStrategy::Augment),
            other => Err(EncodingError::Argument(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Word-level cue labels for a sentence.
pub fn cue_labels(sentence: &Sentence) -> Result<Vec<u8>, EncodingError> {
    let mut labels = vec![CueLabel::None as u8; sentence.len()];
    for inst in &sentence.instances {
        let label = CueLabel::of(inst.cue.class) as u8;
        for w in inst.cue.word_indices() {
            let slot = labels.get_mut(w).ok_or_else(|| EncodingError::Data {
                source_id: sentence.source.clone(),
                msg: format!("cue word {w} out of bounds"),
            })?;
            if *slot != CueLabel::None as u8 && *slot != label {
                return Err(EncodingError::Data {
                    source_id: sentence.source.clone(),
                    msg: format!("word {w} receives conflicting cue labels {} and {label}", *slot),
                });
            }
            *slot = label;
        }
    }
    Ok(labels)
}

/// A sentence with one cue marked. `remap[i]` is the position of original
/// word `i` in `words`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marked {
    pub words: Vec<String>,
    pub remap: Vec<usize>,
}

pub fn mark_cues(
    sentence: &Sentence,
    instance: &NegationInstance,
    strategy: MarkStrategy,
) -> Result<Marked, EncodingError> {
    if instance.cue.parts.is_empty() {
        return Err(EncodingError::Data {
            source_id: sentence.source.clone(),
            msg: "instance has no cue words to mark".into(),
        });
    }
    instance
        .check(&sentence.words)
        .map_err(|msg| EncodingError::Data {
            source_id: sentence.source.clone(),
            msg,
        })?;
    let token = marker(instance.cue.class.code());
    let is_cue = |i: usize| instance.cue.parts.iter().any(|p| p.word == i);
    let mut words = Vec::with_capacity(sentence.len() + instance.cue.parts.len());
    let mut remap = Vec::with_capacity(sentence.len());
    for (i, w) in sentence.words.iter().enumerate() {
        match (strategy, is_cue(i)) {
            (MarkStrategy::Replace, true) => {
                remap.push(words.len());
                words.push(token.to_string());
            }
            (MarkStrategy::Augment, true) => {
                words.push(token.to_string());
                remap.push(words.len());
                words.push(w.surface.clone());
            }
            (_, false) => {
                remap.push(words.len());
                words.push(w.surface.clone());
            }
        }
    }
    Ok(Marked { words, remap })
}

/// Marked words with word-level scope labels for one instance.
pub fn scope_labels(
    sentence: &Sentence,
    instance: &NegationInstance,
    strategy: MarkStrategy,
) -> Result<(Marked, Vec<u8>), EncodingError> {
    let marked = mark_cues(sentence, instance, strategy)?;
    let mut labels = vec![ScopeLabel::Out as u8; marked.words.len()];
    for &w in &instance.scope {
        labels[marked.remap[w]] = ScopeLabel::In as u8;
    }
    Ok((marked, labels))
}

/// Fixed-length subword view of a labeled word sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedExample {
    pub token_ids: Vec<u32>,
    pub token_labels: Vec<u8>,
    pub attention_mask: Vec<u8>,
    /// Token range of each word.
    pub alignment: Vec<Range<usize>>,
    pub n_real_tokens: usize,
    pub source: SentenceSource,
}

impl TokenizedExample {
    pub fn max_len(&self) -> usize {
        self.token_ids.len()
    }

    /// Word-level labels read back off the first token of each word.
    pub fn word_labels(&self) -> Vec<u8> {
        self.alignment.iter().map(|r| self.token_labels[r.start]).collect()
    }

    /// One human-readable line: `source<TAB>token/label ...`.
    pub fn debug_line(&self, tokenizer: &Tokenizer) -> String {
        let mut out = format!("{}\t", self.source);
        for (w, range) in self.alignment.iter().enumerate() {
            if w > 0 {
                out.push_str(" | ");
            }
            let toks: Vec<String> = range
                .clone()
                .map(|t| format!("{}/{}", tokenizer.id_to_token(self.token_ids[t]), self.token_labels[t]))
                .collect();
            out.push_str(&toks.join(" "));
        }
        out.push_str(&format!("\tpad={}", self.max_len() - self.n_real_tokens));
        out
    }
}

pub fn align_to_subwords<S: AsRef<str>>(
    words: &[S],
    word_labels: &[u8],
    tokenizer: &Tokenizer,
    max_len: usize,
    pad_label: u8,
    source: &SentenceSource,
) -> Result<TokenizedExample, EncodingError> {
    if words.len() != word_labels.len() {
        return Err(EncodingError::Argument(format!(
            "{source}: {} words but {} labels",
            words.len(),
            word_labels.len()
        )));
    }
    let mut token_ids = Vec::with_capacity(max_len);
    let mut token_labels = Vec::with_capacity(max_len);
    let mut alignment = Vec::with_capacity(words.len());
    for (word, &label) in words.iter().zip(word_labels) {
        let ids = tokenizer.tokenize_word(word.as_ref());
        let start = token_ids.len();
        token_labels.extend(std::iter::repeat_n(label, ids.len()));
        token_ids.extend(ids);
        alignment.push(start..token_ids.len());
    }
    let n_real_tokens = token_ids.len();
    if n_real_tokens > max_len {
        return Err(EncodingError::Overflow {
            source_id: source.clone(),
            n_tokens: n_real_tokens,
            max_len,
        });
    }
    let mut attention_mask = vec![1u8; n_real_tokens];
    token_ids.resize(max_len, tokenizer.pad_id());
    token_labels.resize(max_len, pad_label);
    attention_mask.resize(max_len, 0);
    Ok(TokenizedExample {
        token_ids,
        token_labels,
        attention_mask,
        alignment,
        n_real_tokens,
        source: source.clone(),
    })
}

/// Per-class loss weights; the padding class always weighs 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub Vec<f32>);

pub fn class_weights(task: Task) -> ClassWeights {
    let mut w = vec![1.0; task.n_classes()];
    w[task.pad_label() as usize] = 0.0;
    ClassWeights(w)
}

/// Examples that could be built, and the errors for those that could not.
#[derive(Debug, Default)]
pub struct Encoded {
    pub examples: Vec<TokenizedExample>,
    pub skipped: Vec<EncodingError>,
}

/// One cue-detection example per sentence.
pub fn encode_cue_task(sentences: &[Sentence], tokenizer: &Tokenizer, max_len: usize) -> Encoded {
    let mut out = Encoded::default();
    for s in sentences {
        let result = cue_labels(s).and_then(|labels| {
            align_to_subwords(&s.surfaces(), &labels, tokenizer, max_len, Task::Cue.pad_label(), &s.source)
        });
        match result {
            Ok(ex) => out.examples.push(ex),
            Err(e) => out.skipped.push(e),
        }
    }
    out
}

/// One scope example per negation instance, each marked for its own cue.
pub fn encode_scope_task(
    sentences: &[Sentence],
    strategy: MarkStrategy,
    tokenizer: &Tokenizer,
    max_len: usize,
) -> Encoded {
    let mut out = Encoded::default();
    for s in sentences {
        for inst in &s.instances {
            let result = scope_labels(s, inst, strategy).and_then(|(marked, labels)| {
                align_to_subwords(&marked.words, &labels, tokenizer, max_len, Task::Scope.pad_label(), &s.source)
            });
            match result {
                Ok(ex) => out.examples.push(ex),
                Err(e) => out.skipped.push(e),
            }
        }
    }
    out
}

pub fn write_debug_dump<W: Write>(
    mut out: W,
    examples: &[TokenizedExample],
    tokenizer: &Tokenizer,
) -> io::Result<()> {
    for ex in examples {
        writeln!(out, "{}", ex.debug_line(tokenizer))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Cue, SubSpan};
    use crate::tokenizer::{HashingTokenizer, WordPieceTokenizer};
    use proptest::prelude::*;

    fn negation_sentence() -> Sentence {
        Sentence::from_words(&["This", "is", "not", "a", "negation"])
            .with_instance(NegationInstance::new(Cue::normal(2), [3, 4], false))
    }

    fn impolite() -> Sentence {
        Sentence::from_words(&["I", "am", "not", "impolite", "."])
            .with_instance(NegationInstance::new(Cue::affix(3, Some(SubSpan::new(0, 2))), [3], false))
    }

    #[test]
    fn cue_labels_for_worked_example() {
        assert_eq!(cue_labels(&negation_sentence()).unwrap(), vec![3, 3, 1, 3, 3]);
        assert_eq!(cue_labels(&Sentence::from_words(&["a", "b"])).unwrap(), vec![3, 3]);
        let nn = Sentence::from_words(&["neither", "x", "nor", "y"])
            .with_instance(NegationInstance::new(Cue::multiword([0, 2]), [1, 3], false));
        assert_eq!(cue_labels(&nn).unwrap(), vec![2, 3, 2, 3]);
    }

    #[test]
    fn conflicting_cue_labels_are_rejected() {
        let s = Sentence::from_words(&["no", "never"])
            .with_instance(NegationInstance::new(Cue::normal(0), [], false))
            .with_instance(NegationInstance::new(Cue::multiword([0, 1]), [], false));
        assert!(matches!(cue_labels(&s), Err(EncodingError::Data { .. })));
    }

    #[test]
    fn replace_and_augment_markers() {
        let s = impolite();
        let inst = &s.instances[0];
        let r = mark_cues(&s, inst, MarkStrategy::Replace).unwrap();
        assert_eq!(r.words, ["I", "am", "not", "token[0]", "."]);
        let a = mark_cues(&s, inst, MarkStrategy::Augment).unwrap();
        assert_eq!(a.words, ["I", "am", "not", "token[0]", "impolite", "."]);
        assert_eq!(a.remap, vec![0, 1, 2, 4, 5]);
    }

    #[test]
    fn empty_cue_is_rejected() {
        let s = Sentence::from_words(&["fine"]);
        let bogus = NegationInstance::new(
            Cue {
                class: CueClass::Normal,
                parts: vec![],
            },
            [],
            false,
        );
        assert!(mark_cues(&s, &bogus, MarkStrategy::Replace).is_err());
    }

    #[test]
    fn scope_labels_for_worked_example() {
        let s = negation_sentence();
        let (m, l) = scope_labels(&s, &s.instances[0], MarkStrategy::Replace).unwrap();
        assert_eq!(m.words, ["This", "is", "token[1]", "a", "negation"]);
        assert_eq!(l, vec![0, 0, 0, 1, 1]);
        let (m, l) = scope_labels(&s, &s.instances[0], MarkStrategy::Augment).unwrap();
        assert_eq!(m.words.len(), 6);
        assert_eq!(l, vec![0, 0, 0, 0, 1, 1]);
        let empty = NegationInstance::new(Cue::normal(2), [], false);
        let (_, l) = scope_labels(&s, &empty, MarkStrategy::Replace).unwrap();
        assert!(l.iter().all(|&x| x == 0));
    }

    fn wordpiece() -> Tokenizer {
        let vocab = ["[PAD]", "[UNK]", "this", "is", "not", "a", "negation", "i", "am", "im", "##polite", "."];
        Tokenizer::WordPiece(WordPieceTokenizer::from_tokens(vocab.iter().map(|s| s.to_string()).collect()).unwrap())
    }

    #[test]
    fn subword_labels_are_duplicated() {
        let s = impolite();
        let labels = cue_labels(&s).unwrap();
        let ex = align_to_subwords(&s.surfaces(), &labels, &wordpiece(), 10, 4, &s.source).unwrap();
        assert_eq!(ex.n_real_tokens, 6);
        assert_eq!(ex.alignment[3], 3..5);
        assert_eq!(ex.token_labels, vec![3, 3, 3, 0, 0, 3, 4, 4, 4, 4]);
        assert_eq!(ex.attention_mask, vec![1, 1, 1, 1, 1, 1, 0, 0, 0, 0]);
        let dump = ex.debug_line(&wordpiece());
        assert!(dump.contains("im/0 ##polite/0"), "{dump}");
    }

    #[test]
    fn worked_example_target_sequence() {
        // "I am not impolite ." with "not" as the normal cue.
        let s = Sentence::from_words(&["I", "am", "not", "impolite", "."])
            .with_instance(NegationInstance::new(Cue::normal(2), [3], false));
        let labels = cue_labels(&s).unwrap();
        let ex = align_to_subwords(&s.surfaces(), &labels, &wordpiece(), 11, 4, &s.source).unwrap();
        assert_eq!(ex.token_labels, vec![3, 3, 1, 3, 3, 3, 4, 4, 4, 4, 4]);
    }

    #[test]
    fn overflow_names_the_sentence() {
        let mut s = Sentence::from_words(&["a"; 5]);
        s.source.document = "doc7".into();
        let err = align_to_subwords(&s.surfaces(), &[3; 5], &wordpiece(), 4, 4, &s.source).unwrap_err();
        assert!(err.to_string().contains("doc7"), "{err}");
    }

    #[test]
    fn weights() {
        assert_eq!(class_weights(Task::Cue).0, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(class_weights(Task::Scope).0, vec![1.0, 1.0, 0.0]);
    }

    fn arb_sentence() -> impl Strategy<Value = Sentence> {
        (1usize..12)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec("[a-zA-Z]{1,12}|[.,;!?]", n),
                    prop::collection::btree_set(0..n, 1..=n.min(3)),
                    prop::collection::btree_set(0..n, 0..=n),
                )
            })
            .prop_map(|(words, cue_words, scope)| {
                let cue = if cue_words.len() == 1 {
                    Cue::normal(*cue_words.first().unwrap())
                } else {
                    Cue::multiword(cue_words)
                };
                Sentence::from_words(&words).with_instance(NegationInstance::new(cue, scope, true))
            })
    }

    proptest! {
        #[test]
        fn marking_lengths_and_alignment(s in arb_sentence()) {
            let inst = &s.instances[0];
            let parts = inst.cue.parts.len();
            let (r, rl) = scope_labels(&s, inst, MarkStrategy::Replace).unwrap();
            prop_assert_eq!(r.words.len(), s.len());
            prop_assert_eq!(rl.len(), r.words.len());
            let (a, al) = scope_labels(&s, inst, MarkStrategy::Augment).unwrap();
            prop_assert_eq!(a.words.len(), s.len() + parts);
            prop_assert_eq!(al.len(), a.words.len());
            for (i, w) in s.words.iter().enumerate() {
                let expected = inst.scope.contains(&i) as u8;
                prop_assert_eq!(al[a.remap[i]], expected);
                prop_assert_eq!(&a.words[a.remap[i]], &w.surface);
            }
        }

        #[test]
        fn tokenized_examples_are_consistent(s in arb_sentence(), piece in 1usize..6) {
            let tok = Tokenizer::Hashing(HashingTokenizer::new(500, piece));
            let labels = cue_labels(&s).unwrap();
            let ex = align_to_subwords(&s.surfaces(), &labels, &tok, 256, 4, &s.source).unwrap();
            let mut next = 0;
            for r in &ex.alignment {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start);
                next = r.end;
            }
            prop_assert_eq!(next, ex.n_real_tokens);
            for t in 0..ex.max_len() {
                prop_assert_eq!(ex.attention_mask[t] == 1, ex.token_labels[t] != 4);
            }
            prop_assert_eq!(ex.word_labels(), labels);
        }
    }
}
