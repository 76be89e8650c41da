//! Tab-separated CD-SCO format of the *SEM 2012 shared task.
//!
//! Each line is one token: document id, sentence number, token number, word,
//! lemma, part of speech, parse fragment, and then either a single `***`
//! column (no negation) or one ⟨cue, scope, event⟩ column triple per negation
//! instance. Blank lines delimit sentences.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{
    Cue, CueClass, CuePart, CorpusError, NegationInstance, Sentence, SentenceSource, SubSpan, Word,
};

const FIXED_COLUMNS: usize = 7;
const NO_NEGATION: &str = "***";
const EMPTY: &str = "_";

struct Line {
    number: usize,
    cols: Vec<String>,
}

/// Parse a CD-SCO stream into sentences tagged with `corpus`.
pub fn parse_cdsco<R: BufRead>(reader: R, corpus: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut block: Vec<Line> = Vec::new();
    let mut last_line = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let number = i + 1;
        last_line = number;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(parse_block(std::mem::take(&mut block), corpus)?);
            }
            continue;
        }
        block.push(Line {
            number,
            cols: line.split('\t').map(str::to_string).collect(),
        });
    }
    if !block.is_empty() {
        sentences.push(parse_block(block, corpus)?);
    }
    log::debug!("parsed {} CD-SCO sentences over {last_line} lines", sentences.len());
    Ok(sentences)
}

fn parse_block(block: Vec<Line>, corpus: &str) -> Result<Sentence, CorpusError> {
    let first = &block[0];
    let width = first.cols.len();
    for line in &block {
        if line.cols.len() != width {
            return Err(CorpusError::Parse {
                line: line.number,
                msg: format!(
                    "expected {width} columns like the sentence's first line, found {}",
                    line.cols.len()
                ),
            });
        }
    }
    if width <= FIXED_COLUMNS {
        return Err(CorpusError::Parse {
            line: first.number,
            msg: format!("expected more than {FIXED_COLUMNS} columns, found {width}"),
        });
    }
    let extra = width - FIXED_COLUMNS;
    let negated = !(extra == 1 && block.iter().all(|l| l.cols[FIXED_COLUMNS] == NO_NEGATION));
    if negated && !extra.is_multiple_of(3) {
        return Err(CorpusError::Parse {
            line: first.number,
            msg: format!("{extra} annotation columns is neither `***` nor a multiple of 3"),
        });
    }

    let sentence_number = first.cols[1].parse::<usize>().map_err(|_| CorpusError::Parse {
        line: first.number,
        msg: format!("sentence number {:?} is not an integer", first.cols[1]),
    })?;
    let source = SentenceSource {
        corpus: corpus.to_string(),
        document: first.cols[0].clone(),
        sentence: sentence_number,
    };

    let words: Vec<Word> = block
        .iter()
        .enumerate()
        .map(|(i, l)| Word {
            surface: l.cols[3].clone(),
            index: i,
            lemma: Some(l.cols[4].clone()),
            pos: Some(l.cols[5].clone()),
            syntax: Some(l.cols[6].clone()),
        })
        .collect();
    if let Some((line, _)) = block.iter().zip(&words).find(|(_, w)| w.surface.is_empty()) {
        return Err(CorpusError::Parse {
            line: line.number,
            msg: "empty word form".into(),
        });
    }

    let mut instances = Vec::new();
    if negated {
        for k in 0..extra / 3 {
            instances.push(parse_instance(&block, &words, FIXED_COLUMNS + 3 * k)?);
        }
    }
    let sentence = Sentence {
        words,
        instances,
        source,
    };
    sentence.validate().map_err(|e| CorpusError::Parse {
        line: first.number,
        msg: e.to_string(),
    })?;
    Ok(sentence)
}

fn parse_instance(block: &[Line], words: &[Word], col: usize) -> Result<NegationInstance, CorpusError> {
    let mut parts = Vec::new();
    let mut scope = std::collections::BTreeSet::new();
    let mut scope_spans = BTreeMap::new();
    let mut events = BTreeMap::new();

    for (line, word) in block.iter().zip(words) {
        let cue = &line.cols[col];
        if cue != EMPTY {
            let span = sub_span(&word.surface, cue).ok_or_else(|| CorpusError::CueNotSubstring {
                line: line.number,
                cue: cue.clone(),
                word: word.surface.clone(),
            })?;
            parts.push(CuePart {
                word: word.index,
                span,
            });
        }
        let in_scope = &line.cols[col + 1];
        if in_scope != EMPTY {
            let span = sub_span(&word.surface, in_scope).ok_or_else(|| CorpusError::Parse {
                line: line.number,
                msg: format!("scope form {in_scope:?} is not part of word {:?}", word.surface),
            })?;
            scope.insert(word.index);
            if let Some(span) = span {
                scope_spans.insert(word.index, span);
            }
        }
        let event = &line.cols[col + 2];
        if event != EMPTY {
            events.insert(word.index, event.clone());
        }
    }

    let class = match parts.as_slice() {
        [] => {
            return Err(CorpusError::Parse {
                line: block[0].number,
                msg: format!("annotation triple at column {} has no cue", col + 1),
            })
        }
        [single] if single.span.is_some() => CueClass::Affix,
        [_] => CueClass::Normal,
        _ => CueClass::Multiword,
    };
    Ok(NegationInstance {
        cue: Cue { class, parts },
        scope,
        scope_includes_cue: false,
        scope_spans,
        events,
    })
}

/// `Ok(None)` for the whole word, `Some(span)` for a strict substring.
fn sub_span(word: &str, form: &str) -> Option<Option<SubSpan>> {
    if form == word {
        Some(None)
    } else {
        SubSpan::locate(word, form).map(Some)
    }
}

fn part_text(word: &str, span: Option<SubSpan>) -> &str {
    match span {
        Some(s) => word.get(s.start..s.end).unwrap_or(word),
        None => word,
    }
}

/// Serialize sentences back to CD-SCO, one blank line after each sentence.
pub fn write_cdsco<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for sentence in sentences {
        for word in &sentence.words {
            let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| EMPTY.to_string());
            let mut cols = vec![
                sentence.source.document.clone(),
                sentence.source.sentence.to_string(),
                word.index.to_string(),
                word.surface.clone(),
                opt(&word.lemma),
                opt(&word.pos),
                opt(&word.syntax),
            ];
            if sentence.instances.is_empty() {
                cols.push(NO_NEGATION.to_string());
            }
            for inst in &sentence.instances {
                let cue = inst
                    .cue
                    .parts
                    .iter()
                    .find(|p| p.word == word.index)
                    .map(|p| part_text(&word.surface, p.span));
                cols.push(cue.unwrap_or(EMPTY).to_string());
                let scope = inst.scope.contains(&word.index).then(|| {
                    part_text(&word.surface, inst.scope_spans.get(&word.index).copied())
                });
                cols.push(scope.unwrap_or(EMPTY).to_string());
                cols.push(
                    inst.events
                        .get(&word.index)
                        .cloned()
                        .unwrap_or_else(|| EMPTY.to_string()),
                );
            }
            writeln!(out, "{}", cols.join("\t"))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(tok: usize, word: &str, rest: &[&str]) -> String {
        let mut cols = vec![
            "doc1".to_string(),
            "3".to_string(),
            tok.to_string(),
            word.to_string(),
            word.to_lowercase(),
            "NN".to_string(),
            "*".to_string(),
        ];
        cols.extend(rest.iter().map(|s| s.to_string()));
        cols.join("\t")
    }

    fn parse(text: &str) -> Result<Vec<Sentence>, CorpusError> {
        parse_cdsco(text.as_bytes(), "test")
    }

    #[test]
    fn affix_cue_from_substring() {
        let text = [
            row(0, "He", &["_", "He", "_"]),
            row(1, "was", &["_", "was", "_"]),
            row(2, "impolite", &["im", "polite", "polite"]),
        ]
        .join("\n");
        let s = &parse(&text).unwrap()[0];
        let inst = &s.instances[0];
        assert_eq!(inst.cue, Cue::affix(2, Some(SubSpan::new(0, 2))));
        assert_eq!(inst.scope.iter().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(inst.scope_spans[&2], SubSpan::new(2, 8));
        assert!(!inst.scope_includes_cue);
        assert_eq!(inst.events[&2], "polite");
    }

    #[test]
    fn triple_star_means_no_negation() {
        let text = [row(0, "Hello", &["***"]), row(1, ".", &["***"])].join("\n");
        let s = parse(&text).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].instances.is_empty());
        assert_eq!(s[0].source.document, "doc1");
        assert_eq!(s[0].source.sentence, 3);
    }

    #[test]
    fn neither_nor_share_one_triple() {
        let text = [
            row(0, "neither", &["neither", "_", "_"]),
            row(1, "he", &["_", "he", "_"]),
            row(2, "nor", &["nor", "_", "_"]),
            row(3, "she", &["_", "she", "_"]),
            row(4, "came", &["_", "came", "came"]),
        ]
        .join("\n");
        let s = &parse(&text).unwrap()[0];
        assert_eq!(s.instances.len(), 1);
        assert_eq!(s.instances[0].cue, Cue::multiword([0, 2]));
    }

    #[test]
    fn two_instances_two_triples() {
        let text = [
            row(0, "not", &["not", "_", "_", "_", "_", "_"]),
            row(1, "unhappy", &["_", "unhappy", "_", "un", "happy", "_"]),
        ]
        .join("\n");
        let s = &parse(&text).unwrap()[0];
        assert_eq!(s.instances.len(), 2);
        assert_eq!(s.instances[0].cue.class, CueClass::Normal);
        assert_eq!(s.instances[1].cue.class, CueClass::Affix);
    }

    #[test]
    fn ragged_columns_name_the_line() {
        let text = format!(
            "{}\n{}\n",
            row(0, "not", &["not", "_", "_"]),
            row(1, "x", &["_", "_"])
        );
        match parse(&text) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn cue_must_be_substring() {
        let text = row(0, "polite", &["un", "_", "_"]);
        assert!(matches!(
            parse(&text),
            Err(CorpusError::CueNotSubstring { line: 1, .. })
        ));
    }

    #[test]
    fn write_empty_and_no_negation() {
        let mut out = Vec::new();
        write_cdsco(&mut out, &[]).unwrap();
        assert!(out.is_empty());

        let mut s = Sentence::from_words(&["Hi"]);
        s.source.document = "d".into();
        let mut out = Vec::new();
        write_cdsco(&mut out, &[s]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "d\t0\t0\tHi\t_\t_\t_\t***\n\n");
    }

    #[test]
    fn round_trip_preserves_columns() {
        let text = [
            row(0, "neither", &["neither", "_", "_", "_", "_", "_"]),
            row(1, "nothing", &["_", "nothing", "_", "no", "thing", "_"]),
            row(2, "nor", &["nor", "_", "_", "_", "_", "_"]),
            row(3, "came", &["_", "came", "came", "_", "_", "_"]),
        ]
        .join("\n")
            + "\n\n";
        let parsed = parse(&text).unwrap();
        let mut out = Vec::new();
        write_cdsco(&mut out, &parsed).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
