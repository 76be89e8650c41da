//! Split scoped instances by punctuation delimitation and report PCS on
//! each half for a rule that stops scopes at punctuation.
//!
//!     cargo run --example punct_analysis

use std::fs;
use std::path::Path;

use negscope::corpus::{parse_bioscope, Sentence};
use negscope::punct::{p_indices, punct_pcs_report, punct_split, SymbolSet};

/// Gold cues; the scope is everything between the nearest punctuation
/// marks on either side of the cue (BioScope scopes include the cue).
fn between_punctuation(gold: &[Sentence], symbols: &SymbolSet) -> Vec<Sentence> {
    gold.iter()
        .map(|s| {
            let mut out = s.clone();
            for inst in &mut out.instances {
                let (lo, hi) = p_indices(s, inst, symbols);
                let lo = lo.map_or(0, |p| p + 1);
                let hi = hi.unwrap_or(s.len());
                inst.scope = (lo..hi).collect();
            }
            out
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bioscope_abstracts.xml");
    let gold = parse_bioscope(&fs::read_to_string(path)?, "bioscope-abstracts")?;
    let symbols = SymbolSet::default();

    let split = punct_split(&gold, &symbols)?;
    for (si, ii) in &split.nopunct {
        let s = &gold[*si];
        let scope: Vec<&str> = s.instances[*ii].scope.iter().map(|&w| s.words[w].surface.as_str()).collect();
        println!("no-punct: {}\n          scope {:?}", s.surfaces().join(" "), scope);
    }

    let pred = between_punctuation(&gold, &symbols);
    let report = punct_pcs_report(&gold, &pred, &symbols)?;
    println!("\n{}", report.to_table());
    Ok(())
}
