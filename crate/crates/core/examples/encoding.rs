//! Label schemes, cue marking and subword alignment on a few sentences.
//!
//!     cargo run --example encoding

use negscope::corpus::{Cue, NegationInstance, Sentence, SubSpan};
use negscope::encoding::{align_to_subwords, cue_labels, mark_cues, scope_labels, MarkStrategy, Task};
use negscope::tokenizer::{Tokenizer, WordPieceTokenizer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vocab = ["[PAD]", "[UNK]", "i", "am", "not", "im", "##polite", ".", "this", "is", "a", "negation"];
    let tok = Tokenizer::WordPiece(WordPieceTokenizer::from_tokens(vocab.iter().map(|s| s.to_string()).collect())?);

    let s = Sentence::from_words(&["This", "is", "not", "a", "negation"])
        .with_instance(NegationInstance::new(Cue::normal(2), [3, 4], false));
    println!("cue labels   {:?}", cue_labels(&s)?);
    for strategy in [MarkStrategy::Replace, MarkStrategy::Augment] {
        let (marked, labels) = scope_labels(&s, &s.instances[0], strategy)?;
        println!("{strategy:<8}     {:?} {:?}", marked.words, labels);
    }

    let s = Sentence::from_words(&["I", "am", "not", "impolite", "."])
        .with_instance(NegationInstance::new(Cue::affix(3, Some(SubSpan::new(0, 2))), [0, 1, 3], false));
    let labels = cue_labels(&s)?;
    let ex = align_to_subwords(&s.surfaces(), &labels, &tok, 12, Task::Cue.pad_label(), &s.source)?;
    println!("\n{}", ex.debug_line(&tok));
    println!("alignment    {:?}", ex.alignment);
    println!("back to words {:?}", ex.word_labels());

    let marked = mark_cues(&s, &s.instances[0], MarkStrategy::Augment)?;
    println!("\naugmented    {:?} remap {:?}", marked.words, marked.remap);
    Ok(())
}
