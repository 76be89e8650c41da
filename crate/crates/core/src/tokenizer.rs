//! Subword tokenizers used by the encoder backends.
//!
//! Words are tokenized one at a time so every subword can be traced back to
//! the word it came from. The cue marker words (`token[0]`, `token[1]`,
//! `token[2]`) are registered as atomic vocabulary items and never split.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Marker words substituted for, or inserted before, cue words.
pub const MARKERS: [&str; 3] = ["token[0]", "token[1]", "token[2]"];

const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

pub fn marker(code: u8) -> &'static str {
    MARKERS[code as usize]
}

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("tokenizer file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("vocabulary is missing required token {0}")]
    MissingToken(&'static str),
    #[error("invalid tokenizer state: {0}")]
    Invalid(String),
}

/// BERT-style uncased WordPiece tokenizer.
#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    vocab: HashMap<String, u32>,
    id_to_token: Vec<String>,
    unk_id: u32,
    pad_id: u32,
}

impl WordPieceTokenizer {
    /// Build from vocabulary lines, appending any missing marker words.
    pub fn from_tokens(mut tokens: Vec<String>) -> Result<Self, TokenizerError> {
        for m in MARKERS {
            if !tokens.iter().any(|t| t == m) {
                tokens.push(m.to_string());
            }
        }
        let vocab: HashMap<String, u32> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let unk_id = *vocab.get("[UNK]").ok_or(TokenizerError::MissingToken("[UNK]"))?;
        let pad_id = *vocab.get("[PAD]").ok_or(TokenizerError::MissingToken("[PAD]"))?;
        Ok(Self {
            vocab,
            id_to_token: tokens,
            unk_id,
            pad_id,
        })
    }

    pub fn from_vocab_file(path: &Path) -> Result<Self, TokenizerError> {
        let text = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_tokens(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    pub fn save(&self, path: &Path) -> Result<(), TokenizerError> {
        let mut text = self.id_to_token.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.id_to_token.len()
    }

    fn normalize(word: &str) -> String {
        word.to_lowercase()
            .nfd()
            .filter(|c| !is_combining_mark(*c))
            .collect()
    }

    fn wordpiece(&self, piece: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = piece.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            out.push(self.unk_id);
            return;
        }
        let mut ids = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let body: String = chars[start..end].iter().collect();
                let candidate = if start > 0 {
                    format!("{CONTINUATION}{body}")
                } else {
                    body
                };
                if let Some(&id) = self.vocab.get(&candidate) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    ids.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk_id);
                    return;
                }
            }
        }
        out.extend(ids);
    }

    pub fn tokenize_word(&self, word: &str) -> Vec<u32> {
        if let Some(&id) = MARKERS.contains(&word).then(|| &self.vocab[word]) {
            return vec![id];
        }
        let mut out = Vec::new();
        for piece in split_punctuation(&Self::normalize(word)) {
            self.wordpiece(&piece, &mut out);
        }
        if out.is_empty() {
            out.push(self.unk_id);
        }
        out
    }
}

/// Deterministic stand-in for a learned vocabulary: words are cut into
/// fixed-width character chunks and hashed into a fixed number of buckets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashingTokenizer {
    pub buckets: u32,
    pub piece_chars: usize,
}

impl HashingTokenizer {
    const PAD: u32 = 0;
    const UNK: u32 = 1;
    const FIRST_MARKER: u32 = 2;
    const FIRST_HASHED: u32 = 5;

    pub fn new(buckets: u32, piece_chars: usize) -> Self {
        Self {
            buckets: buckets.max(1),
            piece_chars: piece_chars.max(1),
        }
    }

    pub fn vocab_size(&self) -> usize {
        (Self::FIRST_HASHED + self.buckets) as usize
    }

    fn bucket(&self, piece: &str) -> u32 {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in piece.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        Self::FIRST_HASHED + (h % self.buckets as u64) as u32
    }

    pub fn pieces(&self, word: &str) -> Vec<String> {
        if MARKERS.contains(&word) {
            return vec![word.to_string()];
        }
        let mut out = Vec::new();
        for part in split_punctuation(&word.to_lowercase()) {
            let chars: Vec<char> = part.chars().collect();
            for (i, chunk) in chars.chunks(self.piece_chars).enumerate() {
                let body: String = chunk.iter().collect();
                out.push(if i == 0 { body } else { format!("{CONTINUATION}{body}") });
            }
        }
        out
    }

    pub fn tokenize_word(&self, word: &str) -> Vec<u32> {
        if let Some(k) = MARKERS.iter().position(|m| *m == word) {
            return vec![Self::FIRST_MARKER + k as u32];
        }
        let ids: Vec<u32> = self.pieces(word).iter().map(|p| self.bucket(p)).collect();
        if ids.is_empty() {
            vec![Self::UNK]
        } else {
            ids
        }
    }
}

/// Tokenizer handle shared by the encoding and tagger modules.
#[derive(Debug, Clone)]
pub enum Tokenizer {
    WordPiece(WordPieceTokenizer),
    Hashing(HashingTokenizer),
}

impl Tokenizer {
    /// Subword ids for one word; never empty.
    pub fn tokenize_word(&self, word: &str) -> Vec<u32> {
        match self {
            Tokenizer::WordPiece(t) => t.tokenize_word(word),
            Tokenizer::Hashing(t) => t.tokenize_word(word),
        }
    }

    pub fn pad_id(&self) -> u32 {
        match self {
            Tokenizer::WordPiece(t) => t.pad_id,
            Tokenizer::Hashing(_) => HashingTokenizer::PAD,
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Tokenizer::WordPiece(t) => t.vocab_size(),
            Tokenizer::Hashing(t) => t.vocab_size(),
        }
    }

    /// Human-readable form of a token id, for debug dumps.
    pub fn id_to_token(&self, id: u32) -> String {
        match self {
            Tokenizer::WordPiece(t) => t
                .id_to_token
                .get(id as usize)
                .cloned()
                .unwrap_or_else(|| format!("<{id}>")),
            Tokenizer::Hashing(_) => match id {
                HashingTokenizer::PAD => "[PAD]".into(),
                HashingTokenizer::UNK => "[UNK]".into(),
                i if (HashingTokenizer::FIRST_MARKER..HashingTokenizer::FIRST_HASHED).contains(&i) => {
                    MARKERS[(i - HashingTokenizer::FIRST_MARKER) as usize].to_string()
                }
                i => format!("#{i}"),
            },
        }
    }

    /// Persist into `dir` (created by the caller).
    pub fn save(&self, dir: &Path) -> Result<(), TokenizerError> {
        match self {
            Tokenizer::WordPiece(t) => t.save(&dir.join("vocab.txt")),
            Tokenizer::Hashing(t) => {
                let path = dir.join("hashing.txt");
                let text = format!("buckets={}\npiece_chars={}\n", t.buckets, t.piece_chars);
                fs::write(&path, text).map_err(|source| TokenizerError::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        }
    }

    pub fn load(dir: &Path) -> Result<Self, TokenizerError> {
        let vocab = dir.join("vocab.txt");
        if vocab.exists() {
            return Ok(Tokenizer::WordPiece(WordPieceTokenizer::from_vocab_file(&vocab)?));
        }
        let path = dir.join("hashing.txt");
        let text = fs::read_to_string(&path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let kv = crate::manifest::parse_key_values(&text);
        let get = |k: &str| -> Result<usize, TokenizerError> {
            kv.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| TokenizerError::Invalid(format!("{} lacks {k}", path.display())))
        };
        Ok(Tokenizer::Hashing(HashingTokenizer::new(
            get("buckets")? as u32,
            get("piece_chars")?,
        )))
    }
}

/// Split a word into runs of non-punctuation and single punctuation characters.
fn split_punctuation(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in word.chars() {
        if c.is_whitespace() || c.is_control() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '\u{2000}'..='\u{206F}' | '\u{3000}'..='\u{303F}' | '«' | '»' | '¡' | '¿')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wordpiece() -> WordPieceTokenizer {
        let vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "i", "am", "not", "im", "##polite", "."];
        WordPieceTokenizer::from_tokens(vocab.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn pieces(t: &WordPieceTokenizer, word: &str) -> Vec<String> {
        t.tokenize_word(word)
            .into_iter()
            .map(|id| t.id_to_token[id as usize].clone())
            .collect()
    }

    #[test]
    fn splits_impolite_into_two_pieces() {
        let t = wordpiece();
        let all: Vec<String> = ["I", "am", "not", "impolite", "."]
            .iter()
            .flat_map(|w| pieces(&t, w))
            .collect();
        assert_eq!(all, ["i", "am", "not", "im", "##polite", "."]);
    }

    #[test]
    fn markers_are_atomic() {
        let t = wordpiece();
        assert_eq!(t.vocab_size(), 13);
        for m in MARKERS {
            assert_eq!(pieces(&t, m), [m]);
        }
        let h = HashingTokenizer::new(100, 3);
        assert_eq!(h.tokenize_word("token[1]"), vec![3]);
    }

    #[test]
    fn unknown_words_map_to_unk() {
        let t = wordpiece();
        assert_eq!(pieces(&t, "zebra"), ["[UNK]"]);
        assert_eq!(pieces(&t, "\u{0007}"), ["[UNK]"]);
    }

    #[test]
    fn accents_are_stripped() {
        let t = WordPieceTokenizer::from_tokens(
            ["[PAD]", "[UNK]", "cafe"].iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        assert_eq!(pieces(&t, "Café"), ["cafe"]);
    }

    #[test]
    fn hashing_pieces_are_chunked() {
        let h = HashingTokenizer::new(1000, 4);
        assert_eq!(h.pieces("Impolite."), ["impo", "##lite", "."]);
        let ids = h.tokenize_word("impolite");
        assert_eq!(ids.len(), 2);
        assert!(ids.iter().all(|&i| (5..1005).contains(&i)));
        assert_eq!(ids, h.tokenize_word("IMPOLITE"));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tokenizer::Hashing(HashingTokenizer::new(77, 5));
        t.save(dir.path()).unwrap();
        match Tokenizer::load(dir.path()).unwrap() {
            Tokenizer::Hashing(h) => assert_eq!(h, HashingTokenizer::new(77, 5)),
            other => panic!("{other:?}"),
        }
        let dir = tempfile::tempdir().unwrap();
        Tokenizer::WordPiece(wordpiece()).save(dir.path()).unwrap();
        let loaded = Tokenizer::load(dir.path()).unwrap();
        assert_eq!(loaded.vocab_size(), 13);
        assert_eq!(loaded.tokenize_word("impolite"), wordpiece().tokenize_word("impolite"));
    }
}
