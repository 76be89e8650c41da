//! Unified corpus representation: one JSON-encoded [`Sentence`] per line.

use std::io::{BufRead, Write};

use super::{CorpusError, Sentence};

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sentence: Sentence =
            serde_json::from_str(&line).map_err(|err| CorpusError::Json { line: i + 1, err })?;
        sentence.validate()?;
        out.push(sentence);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for s in sentences {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
