//! Negation cue detection and scope resolution as token classification.
//!
//! Corpora (Sherlock CD-SCO, BioScope, SFU Review) are read into a shared
//! [`corpus::Sentence`] model, encoded into subword-aligned examples
//! ([`encoding`]), tagged by a fine-tuned encoder ([`tagger`]) and decoded
//! back to cues and scopes ([`decode`]). [`eval`] scores cross-corpus runs,
//! [`punct`] splits scopes by punctuation delimitation and [`cli`] wires it
//! all into the `negscope` binary.

pub mod cli;
pub mod corpus;
pub mod decode;
pub mod encoding;
pub mod eval;
pub mod manifest;
pub mod punct;
pub mod synthetic;
pub mod tagger;
pub mod tokenizer;
