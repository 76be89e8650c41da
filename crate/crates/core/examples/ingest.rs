//! Parse the bundled corpora (or a CD-SCO file given on the command line)
//! and print per-corpus counts.
//!
//!     cargo run --example ingest [-- path/to/file.cd-sco]

use std::fs;
use std::path::{Path, PathBuf};

use negscope::corpus::{parse_bioscope, parse_cdsco, parse_sfu, CueClass, Sentence};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn describe(name: &str, sents: &[Sentence]) {
    let instances: Vec<_> = sents.iter().flat_map(|s| &s.instances).collect();
    let count = |c: CueClass| instances.iter().filter(|i| i.cue.class == c).count();
    println!(
        "{name:<20} {:>5} sentences {:>5} instances  normal {} affix {} multiword {}",
        sents.len(),
        instances.len(),
        count(CueClass::Normal),
        count(CueClass::Affix),
        count(CueClass::Multiword)
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if let Some(path) = std::env::args().nth(1) {
        let sents = parse_cdsco(std::io::BufReader::new(fs::File::open(&path)?), "sherlock-train")?;
        describe(&path, &sents);
        return Ok(());
    }
    let dir = fixtures();
    let train = parse_cdsco(fs::read_to_string(dir.join("sherlock_train.txt"))?.as_bytes(), "sherlock-train")?;
    describe("sherlock-train", &train);
    let abs = parse_bioscope(&fs::read_to_string(dir.join("bioscope_abstracts.xml"))?, "bioscope-abstracts")?;
    describe("bioscope-abstracts", &abs);
    let sfu = parse_sfu(&fs::read_to_string(dir.join("sfu/BOOKS/no1.xml"))?, "sfu", "BOOKS/no1")?;
    describe("sfu (one review)", &sfu);

    let s = &train[6];
    println!("\n{}", s.surfaces().join(" "));
    for inst in &s.instances {
        let cue: Vec<String> = inst
            .cue
            .parts
            .iter()
            .map(|p| match p.span {
                Some(sp) => format!("{}[{}..{}]", s.words[p.word].surface, sp.start, sp.end),
                None => s.words[p.word].surface.clone(),
            })
            .collect();
        let scope: Vec<&str> = inst.scope.iter().map(|&w| s.words[w].surface.as_str()).collect();
        println!("  cue {:?} {:?}  scope {:?}", inst.cue.class, cue, scope);
    }
    Ok(())
}
