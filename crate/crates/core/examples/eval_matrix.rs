//! Cross-corpus evaluation with simple rule-based predictors standing in
//! for trained models.
//!
//!     cargo run --example eval_matrix

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use negscope::corpus::{parse_bioscope, parse_cdsco, Corpus, CorpusName, Cue, NegationInstance, Sentence};
use negscope::eval::{cross_matrix, EvalError, EvalMode};

const CUES: &[&str] = &["not", "no", "n't", "never", "nothing", "without", "nobody", "failed", "lacking", "absent"];

/// Lexicon cues; the scope runs from the cue to the next punctuation mark.
fn lexicon(sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
    Ok(sentences
        .iter()
        .map(|s| {
            let mut out = s.unannotated();
            for (i, w) in s.words.iter().enumerate() {
                if CUES.contains(&w.surface.to_lowercase().as_str()) {
                    let end = (i + 1..s.len())
                        .find(|&j| s.words[j].surface.chars().all(|c| c.is_ascii_punctuation()))
                        .unwrap_or(s.len());
                    out.instances.push(NegationInstance::new(Cue::normal(i), i + 1..end, false));
                }
            }
            out
        })
        .collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let sherlock = parse_cdsco(fs::read_to_string(dir.join("sherlock_dev.txt"))?.as_bytes(), "sherlock-dev")?;
    let abs = parse_bioscope(&fs::read_to_string(dir.join("bioscope_abstracts.xml"))?, "bioscope-abstracts")?;
    let tests = [
        Corpus::new(CorpusName::SherlockDev, sherlock),
        Corpus::new(CorpusName::BioscopeAbstracts, abs),
    ];
    let trains = [CorpusName::SherlockTrain, CorpusName::BioscopeAbstracts];
    let models: BTreeMap<_, _> = trains.iter().map(|&c| (c, lexicon)).collect();

    for mode in [EvalMode::Cue, EvalMode::ScopeEndToEnd] {
        let m = cross_matrix(mode, &models, &trains, &tests)?;
        println!("{}", m.to_table());
    }
    Ok(())
}
