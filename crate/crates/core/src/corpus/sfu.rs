//! SFU Review corpus XML reader.
//!
//! Words are explicit `<W>` (and punctuation `<C>`) elements inside
//! `<SENTENCE>`. A `<cue ID=.. type=..>` wraps the cue words; cue elements
//! reusing one `ID` form a single discontinuous cue. An `<xcope>` names the
//! cue(s) it belongs to through a `<ref SRC=".."/>` child.

use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::xml::{attr, element_name, resolve_ref, whitespace_words};
use super::{Cue, CorpusError, NegationInstance, Sentence, SentenceSource, Word};

#[derive(Debug)]
enum Open {
    Token { text: String },
    Cue { id: String, negation: bool },
    Scope { refs: Vec<String>, words: BTreeSet<usize> },
    Other,
}

#[derive(Debug, Default)]
struct SentenceState {
    words: Vec<Word>,
    open: Vec<Open>,
    /// Negation cue id -> words, in order of first appearance.
    cue_order: Vec<String>,
    cue_words: BTreeMap<String, BTreeSet<usize>>,
    scope_words: BTreeMap<String, BTreeSet<usize>>,
}

impl SentenceState {
    fn add_word(&mut self, surface: &str) {
        let index = self.words.len();
        self.words.push(Word::new(surface, index));
        for open in &mut self.open {
            match open {
                Open::Cue { id, negation: true } => {
                    if !self.cue_words.contains_key(id) {
                        self.cue_order.push(id.clone());
                    }
                    self.cue_words.entry(id.clone()).or_default().insert(index);
                }
                Open::Scope { words, .. } => {
                    words.insert(index);
                }
                _ => {}
            }
        }
    }
}

fn ref_ids(e: &BytesStart<'_>) -> Result<Vec<String>, CorpusError> {
    let raw = match attr(e, "SRC")? {
        Some(v) => v,
        None => attr(e, "ID")?.unwrap_or_default(),
    };
    Ok(raw.split_whitespace().map(str::to_string).collect())
}

/// Parse one SFU review file; `document` names it in sentence sources.
pub fn parse_sfu(xml: &str, corpus: &str, document: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().check_end_names = true;

    let mut sentences = Vec::new();
    let mut current: Option<SentenceState> = None;

    loop {
        let event = reader.read_event().map_err(|e| {
            CorpusError::Xml(format!("at byte {}: {e}", reader.error_position()))
        })?;
        match event {
            Event::Eof => break,
            Event::Start(e) => {
                let name = element_name(&e);
                let Some(st) = current.as_mut() else {
                    if name.eq_ignore_ascii_case("SENTENCE") {
                        current = Some(SentenceState::default());
                    }
                    continue;
                };
                let open = match name.as_str() {
                    "SENTENCE" => return Err(CorpusError::Xml("nested <SENTENCE> element".into())),
                    "W" | "C" => Open::Token {
                        text: String::new(),
                    },
                    "cue" => Open::Cue {
                        id: attr(&e, "ID")?.unwrap_or_default(),
                        negation: attr(&e, "type")?
                            .is_some_and(|t| t.eq_ignore_ascii_case("negation")),
                    },
                    "xcope" => Open::Scope {
                        refs: Vec::new(),
                        words: BTreeSet::new(),
                    },
                    "ref" => {
                        let ids = ref_ids(&e)?;
                        if let Some(Open::Scope { refs, .. }) = st.open.last_mut() {
                            refs.extend(ids);
                        }
                        Open::Other
                    }
                    _ => Open::Other,
                };
                st.open.push(open);
            }
            Event::Empty(e) => {
                if let (Some(st), "ref") = (current.as_mut(), element_name(&e).as_str()) {
                    let ids = ref_ids(&e)?;
                    if let Some(Open::Scope { refs, .. }) = st
                        .open
                        .iter_mut()
                        .rev()
                        .find(|o| matches!(o, Open::Scope { .. }))
                    {
                        refs.extend(ids);
                    }
                }
            }
            Event::End(e) => {
                let Some(st) = current.as_mut() else { continue };
                let name = e.name().as_ref().to_string();
                if name.eq_ignore_ascii_case("SENTENCE") && st.open.is_empty() {
                    let st = current.take().expect("checked above");
                    let source = SentenceSource {
                        corpus: corpus.to_string(),
                        document: document.to_string(),
                        sentence: sentences.len(),
                    };
                    if let Some(s) = finish_sentence(st, source)? {
                        sentences.push(s);
                    }
                    continue;
                }
                match st.open.pop() {
                    Some(Open::Token { text }) => {
                        for (s, e) in whitespace_words(&text) {
                            st.add_word(&text[s..e]);
                        }
                    }
                    Some(Open::Scope { refs, words }) => {
                        for id in refs {
                            st.scope_words.entry(id).or_default().extend(words.iter().copied());
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => push_text(&mut current, &t.xml10_content()),
            Event::GeneralRef(r) => push_text(&mut current, &resolve_ref(&r)?),
            _ => {}
        }
    }
    if current.is_some() {
        return Err(CorpusError::Xml("unterminated <SENTENCE> element".into()));
    }
    Ok(sentences)
}

fn push_text(current: &mut Option<SentenceState>, text: &str) {
    if let Some(Open::Token { text: buf }) = current.as_mut().and_then(|st| st.open.last_mut()) {
        buf.push_str(text);
    }
}

fn finish_sentence(st: SentenceState, source: SentenceSource) -> Result<Option<Sentence>, CorpusError> {
    if st.words.is_empty() {
        return Ok(None);
    }
    let mut instances = Vec::new();
    for id in &st.cue_order {
        let cue_words = &st.cue_words[id];
        let cue = if cue_words.len() == 1 {
            Cue::normal(*cue_words.first().expect("non-empty"))
        } else {
            Cue::multiword(cue_words.iter().copied())
        };
        let scope = match st.scope_words.get(id) {
            Some(words) => words.clone(),
            None => {
                log::warn!("{source}: negation cue {id} has no scope element; using an empty scope");
                BTreeSet::new()
            }
        };
        let includes_cue = cue_words.iter().any(|w| scope.contains(w));
        instances.push(NegationInstance::new(cue, scope, includes_cue));
    }
    let sentence = Sentence {
        words: st.words,
        instances,
        source,
    };
    sentence.validate()?;
    Ok(Some(sentence))
}
