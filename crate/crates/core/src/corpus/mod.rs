//! Corpus data model and readers/writers for the supported annotation formats.
//!
//! Every reader produces [`Sentence`]s: whitespace-level [`Word`]s plus zero or
//! more [`NegationInstance`]s, each pairing one [`Cue`] with the set of words
//! it negates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

mod bioscope;
mod cdsco;
mod jsonl;
mod sfu;
mod split;
mod xml;

pub use bioscope::parse_bioscope;
pub use cdsco::{parse_cdsco, write_cdsco};
pub use jsonl::{read_jsonl, write_jsonl};
pub use sfu::parse_sfu;
pub use split::{split_corpus, write_split_manifest, Partition, SplitRatios, Splits};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: cue form {cue:?} is not a substring of word {word:?}")]
    CueNotSubstring {
        line: usize,
        cue: String,
        word: String,
    },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("invalid sentence {source_id}: {msg}")]
    Invalid { source_id: SentenceSource, msg: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON line {line}: {err}")]
    Json { line: usize, err: serde_json::Error },
}

/// Byte range inside a word's surface form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubSpan {
    pub start: usize,
    pub end: usize,
}

impl SubSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Locate `needle` inside `haystack`, preferring a prefix match, then a
    /// suffix match, then the first interior occurrence.
    pub fn locate(haystack: &str, needle: &str) -> Option<Self> {
        if needle.is_empty() {
            return None;
        }
        if haystack.starts_with(needle) {
            return Some(Self::new(0, needle.len()));
        }
        if haystack.ends_with(needle) {
            return Some(Self::new(haystack.len() - needle.len(), haystack.len()));
        }
        haystack
            .find(needle)
            .map(|start| Self::new(start, start + needle.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub surface: String,
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    /// Parse-tree fragment column of CD-SCO files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntax: Option<String>,
}

impl Word {
    pub fn new(surface: impl Into<String>, index: usize) -> Self {
        Self {
            surface: surface.into(),
            index,
            lemma: None,
            pos: None,
            syntax: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CueClass {
    Affix,
    Normal,
    Multiword,
}

impl CueClass {
    /// Numeric code shared by the cue label schema and the cue marker words.
    pub fn code(self) -> u8 {
        match self {
            CueClass::Affix => 0,
            CueClass::Normal => 1,
            CueClass::Multiword => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuePart {
    pub word: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SubSpan>,
}

impl CuePart {
    pub fn whole(word: usize) -> Self {
        Self { word, span: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    pub class: CueClass,
    pub parts: Vec<CuePart>,
}

impl Cue {
    pub fn normal(word: usize) -> Self {
        Self {
            class: CueClass::Normal,
            parts: vec![CuePart::whole(word)],
        }
    }

    pub fn affix(word: usize, span: Option<SubSpan>) -> Self {
        Self {
            class: CueClass::Affix,
            parts: vec![CuePart { word, span }],
        }
    }

    pub fn multiword(words: impl IntoIterator<Item = usize>) -> Self {
        Self {
            class: CueClass::Multiword,
            parts: words.into_iter().map(CuePart::whole).collect(),
        }
    }

    pub fn word_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts.iter().map(|p| p.word)
    }

    pub fn first_word(&self) -> Option<usize> {
        self.parts.first().map(|p| p.word)
    }

    pub fn last_word(&self) -> Option<usize> {
        self.parts.last().map(|p| p.word)
    }

    /// Check class arity, bounds, and ordering against the host sentence.
    pub fn check(&self, words: &[Word]) -> Result<(), String> {
        if self.parts.is_empty() {
            return Err("cue has no parts".into());
        }
        for pair in self.parts.windows(2) {
            if pair[0].word >= pair[1].word {
                return Err("cue part indices are not strictly increasing".into());
            }
        }
        for part in &self.parts {
            let word = words
                .get(part.word)
                .ok_or_else(|| format!("cue part index {} out of bounds", part.word))?;
            if let Some(span) = part.span {
                if span.is_empty()
                    || span.end > word.surface.len()
                    || span.len() >= word.surface.len()
                    || !word.surface.is_char_boundary(span.start)
                    || !word.surface.is_char_boundary(span.end)
                {
                    return Err(format!(
                        "cue sub-span {}..{} is not a strict part of {:?}",
                        span.start, span.end, word.surface
                    ));
                }
            }
        }
        match self.class {
            CueClass::Affix if self.parts.len() != 1 => Err("affix cue must have one part".into()),
            CueClass::Normal if self.parts.len() != 1 || self.parts[0].span.is_some() => {
                Err("normal cue must be one whole word".into())
            }
            CueClass::Multiword if self.parts.len() < 2 => {
                Err("multiword cue needs at least two parts".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationInstance {
    pub cue: Cue,
    pub scope: BTreeSet<usize>,
    pub scope_includes_cue: bool,
    /// In-scope words whose scope covers only part of the surface form.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scope_spans: BTreeMap<usize, SubSpan>,
    /// Negated-event column values, kept verbatim for CD-SCO round trips.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub events: BTreeMap<usize, String>,
}

impl NegationInstance {
    pub fn new(cue: Cue, scope: impl IntoIterator<Item = usize>, scope_includes_cue: bool) -> Self {
        Self {
            cue,
            scope: scope.into_iter().collect(),
            scope_includes_cue,
            scope_spans: BTreeMap::new(),
            events: BTreeMap::new(),
        }
    }

    pub fn check(&self, words: &[Word]) -> Result<(), String> {
        self.cue.check(words)?;
        if let Some(&i) = self.scope.iter().find(|&&i| i >= words.len()) {
            return Err(format!("scope index {i} out of bounds"));
        }
        if !self.scope_includes_cue {
            for part in &self.cue.parts {
                if part.span.is_none() && self.scope.contains(&part.word) {
                    return Err(format!(
                        "cue word {} appears in a scope that excludes the cue",
                        part.word
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceSource {
    pub corpus: String,
    pub document: String,
    pub sentence: usize,
}

impl fmt::Display for SentenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}#{}", self.corpus, self.document, self.sentence)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub words: Vec<Word>,
    pub instances: Vec<NegationInstance>,
    pub source: SentenceSource,
}

impl Sentence {
    /// Build a sentence from bare surface forms.
    pub fn from_words<S: AsRef<str>>(surfaces: &[S]) -> Self {
        Self {
            words: surfaces
                .iter()
                .enumerate()
                .map(|(i, s)| Word::new(s.as_ref(), i))
                .collect(),
            instances: Vec::new(),
            source: SentenceSource::default(),
        }
    }

    pub fn with_instance(mut self, instance: NegationInstance) -> Self {
        self.instances.push(instance);
        self
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.surface.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Copy of the sentence with every annotation removed.
    pub fn unannotated(&self) -> Self {
        Self {
            words: self.words.clone(),
            instances: Vec::new(),
            source: self.source.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |msg: String| CorpusError::Invalid {
            source_id: self.source.clone(),
            msg,
        };
        if self.words.is_empty() {
            return Err(invalid("sentence has no words".into()));
        }
        for (i, w) in self.words.iter().enumerate() {
            if w.index != i {
                return Err(invalid(format!("word {i} carries index {}", w.index)));
            }
            if w.surface.is_empty() {
                return Err(invalid(format!("word {i} is empty")));
            }
        }
        for inst in &self.instances {
            inst.check(&self.words).map_err(invalid)?;
        }
        Ok(())
    }
}

/// The corpora the experiments are defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusName {
    SherlockTrain,
    SherlockDev,
    SherlockTest,
    BioscopeAbstracts,
    BioscopeFull,
    Sfu,
}

impl CorpusName {
    pub const ALL: [CorpusName; 6] = [
        CorpusName::SherlockTrain,
        CorpusName::SherlockDev,
        CorpusName::SherlockTest,
        CorpusName::BioscopeAbstracts,
        CorpusName::BioscopeFull,
        CorpusName::Sfu,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusName::SherlockTrain => "sherlock-train",
            CorpusName::SherlockDev => "sherlock-dev",
            CorpusName::SherlockTest => "sherlock-test",
            CorpusName::BioscopeAbstracts => "bioscope-abstracts",
            CorpusName::BioscopeFull => "bioscope-full",
            CorpusName::Sfu => "sfu",
        }
    }

    /// Only the Sherlock data annotates sub-word affix cues.
    pub fn has_affix_annotation(self) -> bool {
        matches!(
            self,
            CorpusName::SherlockTrain | CorpusName::SherlockDev | CorpusName::SherlockTest
        )
    }
}

impl fmt::Display for CorpusName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusName {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CorpusName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CorpusError::Argument(format!("unknown corpus name {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: CorpusName,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(name: CorpusName, mut sentences: Vec<Sentence>) -> Self {
        for s in &mut sentences {
            s.source.corpus = name.as_str().to_string();
        }
        Self { name, sentences }
    }

    pub fn instance_count(&self) -> usize {
        self.sentences.iter().map(|s| s.instances.len()).sum()
    }
}
