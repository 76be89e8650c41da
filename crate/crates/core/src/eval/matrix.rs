//! Train-on-one, test-on-all evaluation grid. Rows are test corpora,
//! columns are training corpora.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{cue_prf, scope_token_prf, EvalError, EvalMode, EvalReport, ScopeMatching};
use crate::corpus::{Corpus, CorpusName, NegationInstance, Sentence};
use crate::decode::{extract_cues, predict_cue_labels, run_gold_cues, Pipeline, TokenClassifier};
use crate::encoding::MarkStrategy;

/// Produces predicted sentences for a test corpus.
pub trait Predictor {
    fn predict(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError>;
}

impl<F> Predictor for F
where
    F: Fn(&[Sentence]) -> Result<Vec<Sentence>, EvalError>,
{
    fn predict(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
        self(sentences)
    }
}

fn pred_err(e: impl std::fmt::Display) -> EvalError {
    EvalError::Prediction(e.to_string())
}

/// Cue detection only; predicted instances carry empty scopes.
pub struct CuePredictor<'a, M>(pub &'a M);

impl<M: TokenClassifier> Predictor for CuePredictor<'_, M> {
    fn predict(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
        let (labels, skipped) = predict_cue_labels(self.0, sentences).map_err(pred_err)?;
        if !skipped.is_empty() {
            log::warn!("{} sentences exceed the cue model's length and get no cues", skipped.len());
        }
        Ok(sentences
            .iter()
            .zip(labels)
            .map(|(s, l)| {
                let mut out = s.unannotated();
                for cue in l.as_deref().map(extract_cues).unwrap_or_default() {
                    out.instances.push(NegationInstance::new(cue, [], false));
                }
                out
            })
            .collect())
    }
}

/// Scope resolution for the gold cues.
pub struct GoldCueScopePredictor<'a, M> {
    pub model: &'a M,
    pub strategy: MarkStrategy,
}

impl<M: TokenClassifier> Predictor for GoldCueScopePredictor<'_, M> {
    fn predict(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
        let out = run_gold_cues(self.model, self.strategy, sentences).map_err(pred_err)?;
        if !out.skipped.is_empty() {
            log::warn!("{} scope inputs exceed the model's length and get empty scopes", out.skipped.len());
        }
        Ok(out.sentences)
    }
}

/// Both stages.
pub struct EndToEndPredictor<'a, C, S>(pub Pipeline<'a, C, S>);

impl<C: TokenClassifier, S: TokenClassifier> Predictor for EndToEndPredictor<'_, C, S> {
    fn predict(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
        let out = self.0.run_all(sentences).map_err(pred_err)?;
        if !out.skipped.is_empty() {
            log::warn!("{} inputs exceed a model's length", out.skipped.len());
        }
        Ok(out.sentences)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossMatrix {
    pub mode: EvalMode,
    /// Test corpora.
    pub rows: Vec<String>,
    /// Training corpora.
    pub columns: Vec<String>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<EvalReport>>,
}

impl CrossMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.columns.len())
    }

    pub fn cell(&self, test: &str, train: &str) -> Option<&EvalReport> {
        let r = self.rows.iter().position(|x| x == test)?;
        let c = self.columns.iter().position(|x| x == train)?;
        Some(&self.cells[r][c])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// F1 (x100) grid, with PCS in parentheses for scope modes.
    pub fn to_table(&self) -> String {
        let render = |r: &EvalReport| match &r.pcs {
            Some(p) => format!("{:.2} ({:.2})", r.f1_percent(), p.value),
            None => format!("{:.2}", r.f1_percent()),
        };
        let body: Vec<Vec<String>> = self.cells.iter().map(|row| row.iter().map(render).collect()).collect();
        let first = self.rows.iter().map(String::len).chain([10]).max().unwrap_or(10);
        let width = self
            .columns
            .iter()
            .map(String::len)
            .chain(body.iter().flatten().map(String::len))
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = writeln!(out, "{} F1 (rows: test, columns: train)", self.mode.as_str());
        let _ = write!(out, "{:first$}", "test\\train");
        for c in &self.columns {
            let _ = write!(out, "  {c:>width$}");
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&body) {
            let _ = write!(out, "{name:first$}");
            for cell in row {
                let _ = write!(out, "  {cell:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate every model on every test corpus. Affix cues are merged into
/// normal cues whenever the two corpora disagree on affix annotation.
pub fn cross_matrix<P: Predictor>(
    mode: EvalMode,
    models: &BTreeMap<CorpusName, P>,
    train_corpora: &[CorpusName],
    test_corpora: &[Corpus],
) -> Result<CrossMatrix, EvalError> {
    let mut cells = Vec::with_capacity(test_corpora.len());
    for test in test_corpora {
        let mut row = Vec::with_capacity(train_corpora.len());
        for train in train_corpora {
            let model = models
                .get(train)
                .ok_or_else(|| EvalError::Argument(format!("no model trained on {train}")))?;
            let pred = model.predict(&test.sentences)?;
            let merge = train.has_affix_annotation() != test.name.has_affix_annotation();
            let mut report = match mode {
                EvalMode::Cue => cue_prf(&test.sentences, &pred, merge)?,
                EvalMode::ScopeGold => scope_token_prf(&test.sentences, &pred, ScopeMatching::GoldCue)?,
                EvalMode::ScopeEndToEnd => scope_token_prf(&test.sentences, &pred, ScopeMatching::PredictedCue)?,
            };
            report.merge_affix = merge;
            report.train_corpus = train.to_string();
            report.test_corpus = test.name.to_string();
            row.push(report);
        }
        cells.push(row);
    }
    Ok(CrossMatrix {
        mode,
        rows: test_corpora.iter().map(|c| c.name.to_string()).collect(),
        columns: train_corpora.iter().map(|c| c.to_string()).collect(),
        cells,
    })
}
