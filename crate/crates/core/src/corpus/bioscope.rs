//! BioScope XML reader.
//!
//! Sentences carry inline `<xcope id=..>` and `<cue type=.. ref=..>`
//! elements. Only negation cues are kept; a cue's scope is the `xcope` its
//! `ref` names, falling back to the innermost enclosing `xcope`.

use std::collections::{BTreeSet, HashMap};

use quick_xml::events::Event;
use quick_xml::Reader;

use super::xml::{attr, element_name, resolve_ref, whitespace_words, xml_err};
use super::{Cue, CorpusError, NegationInstance, Sentence, SentenceSource, Word};

#[derive(Debug)]
enum Open {
    Scope { id: Option<String>, start: usize },
    Cue(CueElement),
    Other,
}

#[derive(Debug, Clone)]
struct CueElement {
    negation: bool,
    reference: Option<String>,
    start: usize,
    end: usize,
    /// Ids of the scopes open when the cue started, innermost last.
    enclosing: Vec<Option<String>>,
}

#[derive(Debug, Default)]
struct SentenceState {
    text: String,
    open: Vec<Open>,
    scopes: Vec<(Option<String>, usize, usize)>,
    cues: Vec<CueElement>,
}

/// Parse a BioScope document set; speculation cues are dropped.
pub fn parse_bioscope(xml: &str, corpus: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().check_end_names = true;

    let mut sentences = Vec::new();
    let mut doc_ordinal = 0usize;
    let mut doc_id: Option<String> = None;
    let mut doc_id_text: Option<String> = None;
    let mut sentence_in_doc = 0usize;
    let mut current: Option<SentenceState> = None;

    loop {
        let event = reader.read_event().map_err(|e| {
            CorpusError::Xml(format!("at byte {}: {e}", reader.error_position()))
        })?;
        match event {
            Event::Eof => break,
            Event::Start(e) => {
                let name = element_name(&e);
                match (name.as_str(), current.as_mut()) {
                    ("Document", _) => {
                        doc_ordinal += 1;
                        doc_id = None;
                        sentence_in_doc = 0;
                    }
                    ("DocID", None) => doc_id_text = Some(String::new()),
                    ("sentence", None) => current = Some(SentenceState::default()),
                    ("sentence", Some(_)) => {
                        return Err(CorpusError::Xml("nested <sentence> element".into()))
                    }
                    ("xcope", Some(st)) => {
                        let id = attr(&e, "id")?;
                        st.open.push(Open::Scope {
                            id,
                            start: st.text.len(),
                        });
                    }
                    ("cue", Some(st)) => {
                        let kind = attr(&e, "type")?.unwrap_or_default();
                        let enclosing = st
                            .open
                            .iter()
                            .filter_map(|o| match o {
                                Open::Scope { id, .. } => Some(id.clone()),
                                _ => None,
                            })
                            .collect();
                        st.open.push(Open::Cue(CueElement {
                            negation: kind.eq_ignore_ascii_case("negation"),
                            reference: attr(&e, "ref")?,
                            start: st.text.len(),
                            end: st.text.len(),
                            enclosing,
                        }));
                    }
                    (_, Some(st)) => st.open.push(Open::Other),
                    _ => {}
                }
            }
            Event::End(e) => {
                let name = e.name().as_ref().to_string();
                if name == "DocID" {
                    if let Some(t) = doc_id_text.take() {
                        doc_id = Some(t.trim().to_string());
                    }
                    continue;
                }
                let Some(st) = current.as_mut() else { continue };
                if name == "sentence" {
                    let st = current.take().expect("checked above");
                    let source = SentenceSource {
                        corpus: corpus.to_string(),
                        document: doc_id.clone().unwrap_or_else(|| format!("doc{doc_ordinal}")),
                        sentence: sentence_in_doc,
                    };
                    sentence_in_doc += 1;
                    if let Some(s) = finish_sentence(st, source)? {
                        sentences.push(s);
                    }
                    continue;
                }
                match st.open.pop() {
                    Some(Open::Scope { id, start }) => st.scopes.push((id, start, st.text.len())),
                    Some(Open::Cue(mut cue)) => {
                        cue.end = st.text.len();
                        st.cues.push(cue);
                    }
                    Some(Open::Other) | None => {}
                }
            }
            Event::Text(t) => push_text(&mut current, &mut doc_id_text, &t.xml10_content()),
            Event::CData(t) => {
                let raw = t.into_inner().into_owned();
                push_text(&mut current, &mut doc_id_text, &raw);
            }
            Event::GeneralRef(r) => push_text(&mut current, &mut doc_id_text, &resolve_ref(&r)?),
            _ => {}
        }
    }
    if current.is_some() {
        return Err(xml_err("unterminated <sentence> element"));
    }
    Ok(sentences)
}

fn push_text(current: &mut Option<SentenceState>, doc_id: &mut Option<String>, text: &str) {
    if let Some(st) = current.as_mut() {
        st.text.push_str(text);
    } else if let Some(d) = doc_id.as_mut() {
        d.push_str(text);
    }
}

fn finish_sentence(st: SentenceState, source: SentenceSource) -> Result<Option<Sentence>, CorpusError> {
    let spans = whitespace_words(&st.text);
    if spans.is_empty() {
        return Ok(None);
    }
    let words: Vec<Word> = spans
        .iter()
        .enumerate()
        .map(|(i, &(s, e))| Word::new(&st.text[s..e], i))
        .collect();
    let covered = |start: usize, end: usize| -> BTreeSet<usize> {
        spans
            .iter()
            .enumerate()
            .filter(|(_, &(ws, we))| ws < end && start < we)
            .map(|(i, _)| i)
            .collect()
    };

    // Group negation cue elements sharing a `ref` into one (possibly discontinuous) cue.
    let mut groups: Vec<(Option<String>, Vec<CueElement>)> = Vec::new();
    for cue in st.cues.iter().filter(|c| c.negation) {
        match groups
            .iter_mut()
            .find(|(r, _)| r.is_some() && *r == cue.reference)
        {
            Some((_, members)) => members.push(cue.clone()),
            None => groups.push((cue.reference.clone(), vec![cue.clone()])),
        }
    }
    groups.sort_by_key(|(_, members)| members.iter().map(|c| c.start).min());

    let scope_by_id: HashMap<&str, (usize, usize)> = st
        .scopes
        .iter()
        .filter_map(|(id, s, e)| id.as_deref().map(|id| (id, (*s, *e))))
        .collect();

    let mut instances = Vec::new();
    for (reference, members) in groups {
        let cue_words: BTreeSet<usize> = members.iter().flat_map(|c| covered(c.start, c.end)).collect();
        if cue_words.is_empty() {
            log::warn!("{source}: negation cue covers no words, skipped");
            continue;
        }
        let scope_range = reference
            .as_deref()
            .and_then(|r| scope_by_id.get(r).copied())
            .or_else(|| {
                let innermost = members[0].enclosing.last()?.as_deref()?;
                scope_by_id.get(innermost).copied()
            });
        let scope = match scope_range {
            Some((s, e)) => covered(s, e),
            None => {
                log::warn!("{source}: negation cue without a scope element; using an empty scope");
                BTreeSet::new()
            }
        };
        let cue = if cue_words.len() == 1 {
            Cue::normal(*cue_words.first().expect("non-empty"))
        } else {
            Cue::multiword(cue_words)
        };
        instances.push(NegationInstance::new(cue, scope, true));
    }

    let sentence = Sentence {
        words,
        instances,
        source,
    };
    sentence.validate()?;
    Ok(Some(sentence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CueClass;

    fn doc(body: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<Annotation><DocumentSet><Document type="Biological abstract"><DocID type="PMID">1234</DocID>
<DocumentPart type="AbstractText">{body}</DocumentPart></Document></DocumentSet></Annotation>"#
        )
    }

    #[test]
    fn single_negation_scope() {
        let xml = doc(r#"<sentence id="S1.1">These cells <xcope id="X1.1.1"><cue type="negation" ref="X1.1.1">did not</cue> express IL-2</xcope>.</sentence>"#);
        let s = parse_bioscope(&xml, "abs").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].surfaces(), ["These", "cells", "did", "not", "express", "IL-2."]);
        let inst = &s[0].instances[0];
        assert_eq!(inst.cue, Cue::multiword([2, 3]));
        assert_eq!(inst.scope.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        assert!(inst.scope_includes_cue);
        assert_eq!(s[0].source.document, "1234");
    }

    #[test]
    fn speculation_only_yields_no_instances() {
        let xml = doc(r#"<sentence id="S1.1">It <xcope id="X1"><cue type="speculation" ref="X1">may</cue> bind</xcope>.</sentence>"#);
        let s = parse_bioscope(&xml, "abs").unwrap();
        assert!(s[0].instances.is_empty());
    }

    #[test]
    fn nested_scopes_give_distinct_instances() {
        let xml = doc(concat!(
            r#"<sentence id="S2.1">We <xcope id="X2.1.1"><cue type="negation" ref="X2.1.1">failed</cue> to show "#,
            r#"that <xcope id="X2.1.2">it is <cue type="negation" ref="X2.1.2">not</cue> active</xcope></xcope> here.</sentence>"#
        ));
        let s = &parse_bioscope(&xml, "abs").unwrap()[0];
        assert_eq!(s.instances.len(), 2);
        let outer: Vec<_> = s.instances[0].scope.iter().copied().collect();
        let inner: Vec<_> = s.instances[1].scope.iter().copied().collect();
        assert_eq!(s.instances[0].cue, Cue::normal(1));
        assert_eq!(s.instances[1].cue.class, CueClass::Normal);
        assert_eq!(outer, vec![1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(inner, vec![5, 6, 7, 8]);
    }

    #[test]
    fn cue_without_scope_gets_empty_scope() {
        let xml = doc(r#"<sentence id="S3.1">Absolutely <cue type="negation" ref="X9">no</cue> change.</sentence>"#);
        let s = &parse_bioscope(&xml, "abs").unwrap()[0];
        assert_eq!(s.instances.len(), 1);
        assert!(s.instances[0].scope.is_empty());
    }

    #[test]
    fn discontinuous_cue_elements_share_ref() {
        let xml = doc(r#"<sentence id="S4.1"><xcope id="X4"><cue type="negation" ref="X4">neither</cue> A <cue type="negation" ref="X4">nor</cue> B</xcope> bound.</sentence>"#);
        let s = &parse_bioscope(&xml, "abs").unwrap()[0];
        assert_eq!(s.instances.len(), 1);
        assert_eq!(s.instances[0].cue, Cue::multiword([0, 2]));
    }

    #[test]
    fn entities_are_expanded() {
        let xml = doc(r#"<sentence id="S5.1">A &amp; B <xcope id="X5"><cue type="negation" ref="X5">lack</cue> &lt;it&gt;</xcope></sentence>"#);
        let s = &parse_bioscope(&xml, "abs").unwrap()[0];
        assert_eq!(s.surfaces(), ["A", "&", "B", "lack", "<it>"]);
    }

    #[test]
    fn malformed_xml_is_an_error() {
        let xml = doc(r#"<sentence id="S1">broken <xcope id="X1"></sentence>"#);
        assert!(matches!(parse_bioscope(&xml, "abs"), Err(CorpusError::Xml(_))));
    }
}
