#![allow(dead_code)]

use std::path::{Path, PathBuf};

use negscope::cli::{self, Format};
use negscope::corpus::{read_jsonl, CorpusName, Sentence};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// A corpus location: the env var if set, otherwise the bundled fixture.
pub struct Source {
    pub name: CorpusName,
    pub format: Format,
    pub path: PathBuf,
    pub real: bool,
}

fn source(name: CorpusName, format: Format, var: &str, fallback: &str) -> Option<Source> {
    match std::env::var_os(var) {
        Some(p) => Some(Source {
            name,
            format,
            path: PathBuf::from(p),
            real: true,
        }),
        None if fallback.is_empty() => None,
        None => Some(Source {
            name,
            format,
            path: fixture(fallback),
            real: false,
        }),
    }
}

pub fn sherlock_train() -> Source {
    source(CorpusName::SherlockTrain, Format::Cdsco, "NEGSCOPE_SHERLOCK_TRAIN", "sherlock_train.txt").unwrap()
}

pub fn sherlock_dev() -> Source {
    source(CorpusName::SherlockDev, Format::Cdsco, "NEGSCOPE_SHERLOCK_DEV", "sherlock_dev.txt").unwrap()
}

pub fn sherlock_test() -> Option<Source> {
    source(CorpusName::SherlockTest, Format::Cdsco, "NEGSCOPE_SHERLOCK_TEST", "")
}

pub fn bioscope_abstracts() -> Source {
    source(
        CorpusName::BioscopeAbstracts,
        Format::Bioscope,
        "NEGSCOPE_BIOSCOPE_ABSTRACTS",
        "bioscope_abstracts.xml",
    )
    .unwrap()
}

pub fn bioscope_full() -> Source {
    source(CorpusName::BioscopeFull, Format::Bioscope, "NEGSCOPE_BIOSCOPE_FULL", "bioscope_full.xml").unwrap()
}

pub fn sfu() -> Source {
    source(CorpusName::Sfu, Format::Sfu, "NEGSCOPE_SFU_DIR", "sfu").unwrap()
}

pub fn all_sources() -> Vec<Source> {
    let mut v = vec![sherlock_train(), sherlock_dev()];
    v.extend(sherlock_test());
    v.extend([bioscope_abstracts(), bioscope_full(), sfu()]);
    v
}

impl Source {
    pub fn label(&self) -> String {
        format!("{} ({})", self.name, if self.real { "corpus" } else { "fixture" })
    }

    /// Ingest through the CLI path into a temp file and read it back.
    pub fn load(&self) -> Vec<Sentence> {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("corpus.jsonl");
        cli::ingest(self.format, &self.path, &out, Some(self.name.as_str())).unwrap();
        read_jsonl(std::io::BufReader::new(std::fs::File::open(out).unwrap())).unwrap()
    }
}
