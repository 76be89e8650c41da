use quick_xml::events::{BytesRef, BytesStart};
use quick_xml::XmlVersion;

use super::CorpusError;

pub(super) fn xml_err(e: impl std::fmt::Display) -> CorpusError {
    CorpusError::Xml(e.to_string())
}

pub(super) fn attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>, CorpusError> {
    match e.try_get_attribute(name).map_err(xml_err)? {
        Some(a) => Ok(Some(
            a.normalized_value(XmlVersion::Implicit1_0)
                .map_err(xml_err)?
                .into_owned(),
        )),
        None => Ok(None),
    }
}

pub(super) fn element_name(e: &BytesStart<'_>) -> String {
    e.name().as_ref().to_string()
}

/// Expand a character or predefined entity reference.
pub(super) fn resolve_ref(r: &BytesRef<'_>) -> Result<String, CorpusError> {
    if let Some(c) = r.resolve_char_ref().map_err(xml_err)? {
        return Ok(c.to_string());
    }
    let name: &str = r;
    let text = match name {
        "lt" => "<",
        "gt" => ">",
        "amp" => "&",
        "quot" => "\"",
        "apos" => "'",
        other => return Err(CorpusError::Xml(format!("unknown entity &{other};"))),
    };
    Ok(text.to_string())
}

/// Whitespace-delimited words of `text` with their byte ranges.
pub(super) fn whitespace_words(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}
