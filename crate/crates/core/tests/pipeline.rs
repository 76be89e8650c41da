use std::collections::{BTreeMap, BTreeSet};

use negscope::corpus::{Corpus, CorpusName, Cue, CueClass, NegationInstance, Sentence};
use negscope::decode::{run_gold_cues, Pipeline, TokenClassifier};
use negscope::encoding::{MarkStrategy, Task, TokenizedExample};
use negscope::eval::{cross_matrix, EndToEndPredictor, EvalMode};
use negscope::tagger::{Distribution, TaggerError};
use negscope::tokenizer::{marker, Tokenizer, WordPieceTokenizer};

fn tokenizer() -> Tokenizer {
    let words = [
        "[PAD]", "[UNK]", "he", "did", "not", "come", ",", "and", "she", "never", "called", ".", "neither", "nor",
        "came", "it", "rained",
    ];
    Tokenizer::WordPiece(WordPieceTokenizer::from_tokens(words.iter().map(|s| s.to_string()).collect()).unwrap())
}

fn one_hot(label: usize, n: usize) -> Distribution {
    let mut d = vec![0.0; n];
    d[label] = 1.0;
    d
}

/// Cue model: a fixed lexicon of normal and multiword cue words.
struct LexiconCues(Tokenizer);

impl TokenClassifier for LexiconCues {
    fn task(&self) -> Task {
        Task::Cue
    }
    fn max_len(&self) -> usize {
        24
    }
    fn tokenizer(&self) -> &Tokenizer {
        &self.0
    }
    fn predict_distributions(&self, examples: &[TokenizedExample]) -> Result<Vec<Vec<Distribution>>, TaggerError> {
        let id = |w: &str| self.0.tokenize_word(w)[0];
        let normal = [id("not"), id("never")];
        let multi = [id("neither"), id("nor")];
        Ok(examples
            .iter()
            .map(|ex| {
                ex.token_ids
                    .iter()
                    .zip(&ex.attention_mask)
                    .map(|(t, &m)| {
                        let label = if m == 0 {
                            4
                        } else if normal.contains(t) {
                            1
                        } else if multi.contains(t) {
                            2
                        } else {
                            3
                        };
                        one_hot(label, 5)
                    })
                    .collect()
            })
            .collect())
    }
}

/// Scope model for augmented input: everything after a marked cue word up
/// to the next punctuation token is in scope.
struct ClauseScope(Tokenizer);

impl TokenClassifier for ClauseScope {
    fn task(&self) -> Task {
        Task::Scope
    }
    fn max_len(&self) -> usize {
        24
    }
    fn tokenizer(&self) -> &Tokenizer {
        &self.0
    }
    fn predict_distributions(&self, examples: &[TokenizedExample]) -> Result<Vec<Vec<Distribution>>, TaggerError> {
        let markers: Vec<u32> = (0..3).map(|c| self.0.tokenize_word(marker(c))[0]).collect();
        let punct = [self.0.tokenize_word(",")[0], self.0.tokenize_word(".")[0]];
        Ok(examples
            .iter()
            .map(|ex| {
                let mut state = 0; // 0 outside, 1 next token is the cue word, 2 inside
                ex.token_ids
                    .iter()
                    .zip(&ex.attention_mask)
                    .map(|(t, &m)| {
                        if m == 0 {
                            return one_hot(2, 3);
                        }
                        let label = if markers.contains(t) {
                            state = 1;
                            0
                        } else if state == 1 {
                            state = 2;
                            0
                        } else if punct.contains(t) {
                            state = 0;
                            0
                        } else {
                            (state == 2) as usize
                        };
                        one_hot(label, 3)
                    })
                    .collect()
            })
            .collect())
    }
}

fn words(s: &str) -> Vec<&str> {
    s.split(' ').collect()
}

fn summary(s: &Sentence) -> Vec<(CueClass, Vec<usize>, BTreeSet<usize>)> {
    s.instances
        .iter()
        .map(|i| (i.cue.class, i.cue.word_indices().collect(), i.scope.clone()))
        .collect()
}

#[test]
fn two_cues_get_separate_scopes() {
    let (c, s) = (LexiconCues(tokenizer()), ClauseScope(tokenizer()));
    let pipeline = Pipeline::new(&c, &s, MarkStrategy::Augment);
    let out = pipeline
        .run(&Sentence::from_words(&words("he did not come , and she never called .")))
        .unwrap();
    assert_eq!(
        summary(&out),
        vec![
            (CueClass::Normal, vec![2], BTreeSet::from([3])),
            (CueClass::Normal, vec![7], BTreeSet::from([8])),
        ]
    );
}

#[test]
fn discontinuous_cue_becomes_one_instance() {
    let (c, s) = (LexiconCues(tokenizer()), ClauseScope(tokenizer()));
    let out = Pipeline::new(&c, &s, MarkStrategy::Augment)
        .run(&Sentence::from_words(&words("neither he nor she came .")))
        .unwrap();
    assert_eq!(summary(&out), vec![(CueClass::Multiword, vec![0, 2], BTreeSet::from([1, 3, 4]))]);
}

#[test]
fn sentence_without_cues_passes_through() {
    let (c, s) = (LexiconCues(tokenizer()), ClauseScope(tokenizer()));
    let out = Pipeline::new(&c, &s, MarkStrategy::Augment)
        .run(&Sentence::from_words(&words("it rained .")))
        .unwrap();
    assert!(out.instances.is_empty());
    assert_eq!(out.surfaces(), words("it rained ."));
}

#[test]
fn overflow_is_reported_not_truncated() {
    let (c, s) = (LexiconCues(tokenizer()), ClauseScope(tokenizer()));
    let long: Vec<&str> = std::iter::repeat_n("he", 30).collect();
    let out = Pipeline::new(&c, &s, MarkStrategy::Augment)
        .run_all(&[Sentence::from_words(&long)])
        .unwrap();
    assert_eq!(out.skipped.len(), 1);
}

fn gold() -> Vec<Sentence> {
    vec![
        Sentence::from_words(&words("he did not come , and she never called ."))
            .with_instance(NegationInstance::new(Cue::normal(2), [3], false))
            .with_instance(NegationInstance::new(Cue::normal(7), [8], false)),
        Sentence::from_words(&words("neither he nor she came ."))
            .with_instance(NegationInstance::new(Cue::multiword([0, 2]), [1, 3, 4], false)),
        Sentence::from_words(&words("it rained .")),
    ]
}

#[test]
fn gold_cue_scopes_match() {
    let s = ClauseScope(tokenizer());
    let out = run_gold_cues(&s, MarkStrategy::Augment, &gold()).unwrap();
    assert!(out.skipped.is_empty());
    for (g, p) in gold().iter().zip(&out.sentences) {
        assert_eq!(summary(g), summary(p));
    }
}

#[test]
fn end_to_end_matrix_is_perfect_on_its_own_data() {
    let (c, s) = (LexiconCues(tokenizer()), ClauseScope(tokenizer()));
    let mut models = BTreeMap::new();
    models.insert(
        CorpusName::SherlockTrain,
        EndToEndPredictor(Pipeline::new(&c, &s, MarkStrategy::Augment)),
    );
    let tests = [
        Corpus::new(CorpusName::SherlockTest, gold()),
        Corpus::new(CorpusName::Sfu, gold()),
    ];
    let m = cross_matrix(EvalMode::ScopeEndToEnd, &models, &[CorpusName::SherlockTrain], &tests).unwrap();
    assert_eq!(m.shape(), (2, 1));
    for row in &m.cells {
        let r = &row[0];
        assert_eq!(r.f1.value, 1.0);
        assert_eq!(r.pcs.unwrap().value, 100.0);
        assert_eq!(r.n_instances, 3);
    }
    assert!(!m.cell("sherlock-test", "sherlock-train").unwrap().merge_affix);
    assert!(m.cell("sfu", "sherlock-train").unwrap().merge_affix);
}
