//! From token distributions back to words, cues and scopes.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::ops::Range;

use serde::Serialize;

use crate::corpus::{Cue, NegationInstance, Sentence};
use crate::encoding::{
    align_to_subwords, mark_cues, CueLabel, EncodingError, MarkStrategy, ScopeLabel, Task, TokenizedExample,
};
use crate::tagger::{Distribution, TaggerError, TaggerModel};
use crate::tokenizer::Tokenizer;

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Anything that maps tokenized examples to per-token distributions.
pub trait TokenClassifier {
    fn task(&self) -> Task;
    fn max_len(&self) -> usize;
    fn tokenizer(&self) -> &Tokenizer;
    fn predict_distributions(&self, examples: &[TokenizedExample]) -> Result<Vec<Vec<Distribution>>, TaggerError>;
}

impl TokenClassifier for TaggerModel {
    fn task(&self) -> Task {
        self.task
    }

    fn max_len(&self) -> usize {
        self.max_len
    }

    fn tokenizer(&self) -> &Tokenizer {
        TaggerModel::tokenizer(self)
    }

    fn predict_distributions(&self, examples: &[TokenizedExample]) -> Result<Vec<Vec<Distribution>>, TaggerError> {
        TaggerModel::predict_distributions(self, examples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordPrediction {
    pub word_index: usize,
    /// Distribution over the task's classes with the padding class removed.
    pub distribution: Vec<f32>,
    pub label: u8,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(d: &[f32]) -> usize {
    let mut best = 0;
    for (i, &p) in d.iter().enumerate() {
        if p > d[best] {
            best = i;
        }
    }
    best
}

/// Average each word's token distributions. With `pad_class` set, that
/// entry is dropped and the rest renormalized.
pub fn aggregate_to_words(
    token_distributions: &[Distribution],
    alignment: &[Range<usize>],
    pad_class: Option<usize>,
) -> Result<Vec<WordPrediction>, DecodeError> {
    let mut out = Vec::with_capacity(alignment.len());
    for (w, range) in alignment.iter().enumerate() {
        if range.is_empty() || range.end > token_distributions.len() {
            return Err(DecodeError::Internal(format!(
                "word {w} has token range {range:?} over {} tokens",
                token_distributions.len()
            )));
        }
        let width = token_distributions[range.start].len();
        let mut mean = vec![0.0f64; width];
        for d in &token_distributions[range.clone()] {
            for (m, &p) in mean.iter_mut().zip(d) {
                *m += p as f64;
            }
        }
        let n = range.len() as f64;
        let mut dist: Vec<f64> = mean
            .into_iter()
            .enumerate()
            .filter(|&(c, _)| Some(c) != pad_class)
            .map(|(_, m)| m / n)
            .collect();
        if pad_class.is_some() {
            let total: f64 = dist.iter().sum();
            if total > 0.0 {
                dist.iter_mut().for_each(|p| *p /= total);
            } else {
                let k = dist.len() as f64;
                dist.iter_mut().for_each(|p| *p = 1.0 / k);
            }
        }
        let distribution: Vec<f32> = dist.into_iter().map(|p| p as f32).collect();
        let label = argmax(&distribution) as u8;
        out.push(WordPrediction {
            word_index: w,
            distribution,
            label,
        });
    }
    Ok(out)
}

/// Cues from word-level cue labels. All label-2 words form a single
/// multiword cue (a lone label-2 word becomes a normal cue).
pub fn extract_cues(word_labels: &[u8]) -> Vec<Cue> {
    let mut cues = Vec::new();
    let mut multi = Vec::new();
    for (i, &l) in word_labels.iter().enumerate() {
        match l {
            l if l == CueLabel::Affix as u8 => cues.push(Cue::affix(i, None)),
            l if l == CueLabel::Normal as u8 => cues.push(Cue::normal(i)),
            l if l == CueLabel::Multi as u8 => multi.push(i),
            _ => {}
        }
    }
    match multi.len() {
        0 => {}
        1 => cues.push(Cue::normal(multi[0])),
        _ => cues.push(Cue::multiword(multi)),
    }
    cues.sort_by_key(|c| c.first_word());
    cues
}

fn predict_word_labels<M: TokenClassifier>(
    model: &M,
    examples: &[TokenizedExample],
) -> Result<Vec<Vec<u8>>, DecodeError> {
    let dists = model.predict_distributions(examples)?;
    let pad = model.task().pad_label() as usize;
    examples
        .iter()
        .zip(&dists)
        .map(|(ex, d)| {
            Ok(aggregate_to_words(d, &ex.alignment, Some(pad))?
                .into_iter()
                .map(|w| w.label)
                .collect())
        })
        .collect()
}

/// One slot per input (`None` where the input overflowed the model) plus
/// the overflow errors.
pub type Predicted<T> = (Vec<Option<T>>, Vec<EncodingError>);

/// Word-level cue labels for each sentence; `None` where the sentence did
/// not fit into the model's sequence length.
pub fn predict_cue_labels<M: TokenClassifier>(
    model: &M,
    sentences: &[Sentence],
) -> Result<Predicted<Vec<u8>>, DecodeError> {
    let mut examples = Vec::new();
    let mut slots = Vec::with_capacity(sentences.len());
    let mut skipped = Vec::new();
    for s in sentences {
        let dummy = vec![CueLabel::None as u8; s.len()];
        match align_to_subwords(&s.surfaces(), &dummy, model.tokenizer(), model.max_len(), Task::Cue.pad_label(), &s.source) {
            Ok(ex) => {
                slots.push(Some(examples.len()));
                examples.push(ex);
            }
            Err(e @ EncodingError::Overflow { .. }) => {
                slots.push(None);
                skipped.push(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let labels = predict_word_labels(model, &examples)?;
    Ok((slots.into_iter().map(|s| s.map(|i| labels[i].clone())).collect(), skipped))
}

/// Predicted scope of each `(sentence, cue)` request.
pub fn predict_scopes<M: TokenClassifier>(
    model: &M,
    strategy: MarkStrategy,
    requests: &[(&Sentence, &Cue)],
) -> Result<Predicted<BTreeSet<usize>>, DecodeError> {
    let mut examples = Vec::new();
    let mut remaps = Vec::new();
    let mut slots = Vec::with_capacity(requests.len());
    let mut skipped = Vec::new();
    for (s, cue) in requests {
        let probe = NegationInstance::new((*cue).clone(), [], false);
        let marked = mark_cues(s, &probe, strategy)?;
        let dummy = vec![ScopeLabel::Out as u8; marked.words.len()];
        match align_to_subwords(&marked.words, &dummy, model.tokenizer(), model.max_len(), Task::Scope.pad_label(), &s.source) {
            Ok(ex) => {
                slots.push(Some(examples.len()));
                examples.push(ex);
                remaps.push(marked.remap);
            }
            Err(e @ EncodingError::Overflow { .. }) => {
                slots.push(None);
                skipped.push(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let labels = predict_word_labels(model, &examples)?;
    let scopes = slots
        .into_iter()
        .map(|slot| {
            slot.map(|i| {
                remaps[i]
                    .iter()
                    .enumerate()
                    .filter(|&(_, &m)| labels[i][m] == ScopeLabel::In as u8)
                    .map(|(w, _)| w)
                    .collect()
            })
        })
        .collect();
    Ok((scopes, skipped))
}

fn instance_from(cue: Cue, scope: BTreeSet<usize>) -> NegationInstance {
    let includes = cue.word_indices().any(|w| scope.contains(&w));
    NegationInstance::new(cue, scope, includes)
}

/// Cue stage then one scope prediction per predicted cue.
pub struct Pipeline<'a, C, S> {
    pub cue_model: &'a C,
    pub scope_model: &'a S,
    pub strategy: MarkStrategy,
}

/// Predicted sentences plus the inputs that overflowed a model.
#[derive(Debug, Default)]
pub struct PipelineOutput {
    pub sentences: Vec<Sentence>,
    pub skipped: Vec<EncodingError>,
}

impl<'a, C: TokenClassifier, S: TokenClassifier> Pipeline<'a, C, S> {
    pub fn new(cue_model: &'a C, scope_model: &'a S, strategy: MarkStrategy) -> Self {
        Self {
            cue_model,
            scope_model,
            strategy,
        }
    }

    pub fn run(&self, sentence: &Sentence) -> Result<Sentence, DecodeError> {
        let mut out = self.run_all(std::slice::from_ref(sentence))?;
        if let Some(e) = out.skipped.pop() {
            return Err(e.into());
        }
        Ok(out.sentences.pop().expect("one sentence in, one out"))
    }

    /// End-to-end prediction; gold annotations are ignored.
    pub fn run_all(&self, sentences: &[Sentence]) -> Result<PipelineOutput, DecodeError> {
        let (labels, mut skipped) = predict_cue_labels(self.cue_model, sentences)?;
        let cues: Vec<Vec<Cue>> = labels
            .iter()
            .map(|l| l.as_deref().map(extract_cues).unwrap_or_default())
            .collect();
        let (sentences_out, more) = scope_stage(self.scope_model, self.strategy, sentences, &cues)?;
        skipped.extend(more);
        Ok(PipelineOutput {
            sentences: sentences_out,
            skipped,
        })
    }
}

/// Scope predictions for the gold cues of each sentence.
pub fn run_gold_cues<S: TokenClassifier>(
    scope_model: &S,
    strategy: MarkStrategy,
    sentences: &[Sentence],
) -> Result<PipelineOutput, DecodeError> {
    let cues: Vec<Vec<Cue>> = sentences
        .iter()
        .map(|s| s.instances.iter().map(|i| i.cue.clone()).collect())
        .collect();
    let (sentences, skipped) = scope_stage(scope_model, strategy, sentences, &cues)?;
    Ok(PipelineOutput { sentences, skipped })
}

fn scope_stage<S: TokenClassifier>(
    model: &S,
    strategy: MarkStrategy,
    sentences: &[Sentence],
    cues: &[Vec<Cue>],
) -> Result<(Vec<Sentence>, Vec<EncodingError>), DecodeError> {
    let requests: Vec<(&Sentence, &Cue)> = sentences
        .iter()
        .zip(cues)
        .flat_map(|(s, cs)| cs.iter().map(move |c| (s, c)))
        .collect();
    let (scopes, skipped) = predict_scopes(model, strategy, &requests)?;
    let mut scopes = scopes.into_iter();
    let mut out = Vec::with_capacity(sentences.len());
    for (s, cs) in sentences.iter().zip(cues) {
        let mut pred = s.unannotated();
        for cue in cs {
            let scope = scopes.next().expect("one scope per request").unwrap_or_default();
            pred.instances.push(instance_from(cue.clone(), scope));
        }
        out.push(pred);
    }
    Ok((out, skipped))
}

#[derive(Serialize)]
struct DumpLine<'a> {
    source: String,
    words: Vec<&'a str>,
    cues: Vec<Vec<usize>>,
    cue_classes: Vec<&'static str>,
    scopes: Vec<Vec<usize>>,
}

/// One JSON object per sentence: words, cue word indices and scopes.
pub fn write_prediction_dump<W: Write>(mut out: W, sentences: &[Sentence]) -> io::Result<()> {
    for s in sentences {
        let line = DumpLine {
            source: s.source.to_string(),
            words: s.surfaces(),
            cues: s.instances.iter().map(|i| i.cue.word_indices().collect()).collect(),
            cue_classes: s
                .instances
                .iter()
                .map(|i| match i.cue.class.code() {
                    0 => "affix",
                    1 => "normal",
                    _ => "multiword",
                })
                .collect(),
            scopes: s.instances.iter().map(|i| i.scope.iter().copied().collect()).collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::corpus::CueClass;

    #[test]
    fn mean_of_two_tokens() {
        let d = vec![vec![0.6, 0.4], vec![0.2, 0.8]];
        let w = aggregate_to_words(&d, &[0..2], None).unwrap();
        assert!((w[0].distribution[0] - 0.4).abs() < 1e-6);
        assert!((w[0].distribution[1] - 0.6).abs() < 1e-6);
        assert_eq!(w[0].label, 1);
    }

    #[test]
    fn single_token_passes_through() {
        let d = vec![vec![0.1, 0.7, 0.2]];
        let w = aggregate_to_words(&d, &[0..1], None).unwrap();
        assert_eq!(w[0].distribution, d[0]);
    }

    #[test]
    fn pad_class_is_dropped_and_renormalized() {
        let d = vec![vec![0.1, 0.1, 0.8]];
        let w = aggregate_to_words(&d, &[0..1], Some(2)).unwrap();
        assert_eq!(w[0].distribution.len(), 2);
        assert!((w[0].distribution[0] - 0.5).abs() < 1e-6);
        assert_eq!(w[0].label, 0, "tie goes to the lowest class");
    }

    #[test]
    fn empty_range_is_internal_error() {
        let d = vec![vec![1.0]];
        assert!(matches!(aggregate_to_words(&d, &[0..0], None), Err(DecodeError::Internal(_))));
    }

    #[test]
    fn cue_extraction() {
        assert_eq!(extract_cues(&[3, 3, 1, 3, 3]), vec![Cue::normal(2)]);
        assert!(extract_cues(&[3, 3, 3]).is_empty());
        assert_eq!(extract_cues(&[2, 3, 3, 2, 3]), vec![Cue::multiword([0, 3])]);
        let mixed = extract_cues(&[0, 1, 2, 2]);
        assert_eq!(mixed.len(), 3);
        assert_eq!(mixed[0].class, CueClass::Affix);
        assert_eq!(mixed[0].parts[0].span, None);
    }
}
