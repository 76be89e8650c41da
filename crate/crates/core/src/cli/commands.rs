use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::Serialize;
use walkdir::WalkDir;

use super::config::ExperimentConfig;
use super::{runtime, CliError, Format, Subset};
use crate::corpus::{
    parse_bioscope, parse_cdsco, parse_sfu, read_jsonl, split_corpus, write_cdsco, write_jsonl,
    write_split_manifest, Corpus, CorpusName, CueClass, Sentence, SplitRatios, Splits,
};
use crate::decode::{run_gold_cues, write_prediction_dump, Pipeline};
use crate::encoding::{encode_cue_task, encode_scope_task, Task};
use crate::eval::{
    cross_matrix, CuePredictor, EndToEndPredictor, EvalError, EvalMode, GoldCueScopePredictor, Predictor,
};
use crate::punct::{punct_pcs_report, subcorpus, PunctClass, PunctReport, SymbolSet};
use crate::tagger::{make_backend, train as train_model, CheckpointMeta, TaggerModel, TrainHistory};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub corpus: String,
    pub sentences: usize,
    pub negated_sentences: usize,
    pub instances: usize,
    pub affix_cues: usize,
    pub normal_cues: usize,
    pub multiword_cues: usize,
}

impl IngestSummary {
    fn of(corpus: &str, sentences: &[Sentence]) -> Self {
        let mut s = IngestSummary {
            corpus: corpus.to_string(),
            sentences: sentences.len(),
            ..Default::default()
        };
        for sent in sentences {
            s.negated_sentences += !sent.instances.is_empty() as usize;
            for inst in &sent.instances {
                s.instances += 1;
                match inst.cue.class {
                    CueClass::Affix => s.affix_cues += 1,
                    CueClass::Normal => s.normal_cues += 1,
                    CueClass::Multiword => s.multiword_cues += 1,
                }
            }
        }
        s
    }
}

fn read_corpus_file(path: &Path) -> Result<Vec<Sentence>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    read_jsonl(BufReader::new(f)).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| runtime(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_sentences(path: &Path, sentences: &[Sentence]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, sentences).map_err(runtime)?;
    write_file(path, buf)
}

fn sfu_documents(input: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    if input.is_file() {
        let doc = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(vec![(doc, input.to_path_buf())]);
    }
    let mut docs = Vec::new();
    for entry in WalkDir::new(input).sort_by_file_name() {
        let entry = entry.map_err(runtime)?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")) {
            let rel = path.strip_prefix(input).unwrap_or(path).with_extension("");
            docs.push((rel.to_string_lossy().replace('\\', "/"), path.to_path_buf()));
        }
    }
    Ok(docs)
}

/// Parse `input` in `format` and write the JSON-lines corpus to `out`,
/// plus `<out>.summary.json`.
pub fn ingest(format: Format, input: &Path, out: &Path, corpus: Option<&str>) -> Result<IngestSummary, CliError> {
    if !input.exists() {
        return Err(CliError::Usage(format!("{} does not exist", input.display())));
    }
    let name = corpus.unwrap_or(match format {
        Format::Cdsco => "cdsco",
        Format::Bioscope => "bioscope",
        Format::Sfu => "sfu",
    });
    let ctx = |p: &Path, e: &dyn std::fmt::Display| runtime(format!("{}: {e}", p.display()));
    let sentences = match format {
        Format::Cdsco => {
            let f = File::open(input).map_err(|e| ctx(input, &e))?;
            parse_cdsco(BufReader::new(f), name).map_err(|e| ctx(input, &e))?
        }
        Format::Bioscope => {
            let text = fs::read_to_string(input).map_err(|e| ctx(input, &e))?;
            parse_bioscope(&text, name).map_err(|e| ctx(input, &e))?
        }
        Format::Sfu => {
            let mut all = Vec::new();
            for (doc, path) in sfu_documents(input)? {
                let text = fs::read_to_string(&path).map_err(|e| ctx(&path, &e))?;
                all.extend(parse_sfu(&text, name, &doc).map_err(|e| ctx(&path, &e))?);
            }
            all
        }
    };
    write_sentences(out, &sentences)?;
    let summary = IngestSummary::of(name, &sentences);
    let json = serde_json::to_string_pretty(&summary).map_err(runtime)?;
    let mut summary_path = out.as_os_str().to_owned();
    summary_path.push(".summary.json");
    write_file(Path::new(&summary_path), &json)?;
    Ok(summary)
}

fn parse_ratios(s: &str) -> Result<SplitRatios, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad ratios {s:?}")))?;
    match parts[..] {
        [a, b, c] => SplitRatios::new(a, b, c).map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage(format!("expected three ratios, got {s:?}"))),
    }
}

fn symbol_set(symbols: Option<&str>) -> Result<SymbolSet, CliError> {
    match symbols {
        Some(s) => s.parse().map_err(|e| CliError::Usage(format!("--symbols: {e}"))),
        None => Ok(SymbolSet::default()),
    }
}

/// Write `train.jsonl`, `dev.jsonl`, `test.jsonl` and `split_manifest.txt`.
pub fn split(
    input: &Path,
    out: &Path,
    seed: u64,
    ratios: &str,
    subset: Option<Subset>,
    symbols: Option<&str>,
) -> Result<Splits, CliError> {
    let ratios = parse_ratios(ratios)?;
    let symbols = symbol_set(symbols)?;
    let mut sentences = read_corpus_file(input)?;
    if let Some(subset) = subset {
        let class = match subset {
            Subset::Punct => PunctClass::Punct,
            Subset::Nopunct => PunctClass::NoPunct,
        };
        sentences = subcorpus(&sentences, &symbols, class).map_err(runtime)?;
    }
    let splits = split_corpus(&sentences, ratios, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    for (part, data) in splits.parts() {
        write_sentences(&out.join(format!("{}.jsonl", part.as_str())), data)?;
    }
    let mut manifest = Vec::new();
    write_split_manifest(&mut manifest, &splits).map_err(runtime)?;
    write_file(&out.join("split_manifest.txt"), manifest)?;
    Ok(splits)
}

/// Train and write the checkpoint, `history.csv`, `experiment.conf` and
/// `overflow.txt` into `cfg.out`.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainHistory, CliError> {
    let train_sents = read_corpus_file(&cfg.train)?;
    let dev_sents = read_corpus_file(&cfg.dev)?;
    let backend = make_backend(&cfg.backend, cfg.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let encode = |sents: &[Sentence]| match cfg.task {
        Task::Cue => encode_cue_task(sents, &backend.tokenizer, cfg.max_len),
        Task::Scope => encode_scope_task(
            sents,
            cfg.strategy.expect("validated for the scope task"),
            &backend.tokenizer,
            cfg.max_len,
        ),
    };
    let train_set = encode(&train_sents);
    let dev_set = encode(&dev_sents);
    let mut overflow = String::new();
    for (split, e) in train_set
        .skipped
        .iter()
        .map(|e| ("train", e))
        .chain(dev_set.skipped.iter().map(|e| ("dev", e)))
    {
        overflow.push_str(&format!("{split}\t{e}\n"));
    }
    let n_skipped = train_set.skipped.len() + dev_set.skipped.len();
    if n_skipped > 0 {
        eprintln!("{n_skipped} examples skipped (see overflow.txt)");
    }
    write_file(&cfg.out.join("overflow.txt"), &overflow)?;
    write_file(&cfg.out.join("experiment.conf"), cfg.render())?;

    let mut model = TaggerModel::new(backend, cfg.task, cfg.max_len, cfg.seed).map_err(runtime)?;
    let history = train_model(&mut model, &train_set.examples, &dev_set.examples, &cfg.train_config).map_err(runtime)?;
    let mut extra = BTreeMap::new();
    extra.insert("skipped_examples".to_string(), n_skipped.to_string());
    extra.insert("best_epoch".to_string(), history.best_epoch.to_string());
    let meta = CheckpointMeta {
        strategy: cfg.strategy,
        train_corpus: train_sents.first().map(|s| s.source.corpus.clone()),
        train_config: Some(cfg.train_config.clone()),
        extra,
    };
    model.save(&cfg.out, &meta).map_err(runtime)?;
    write_file(&cfg.out.join("history.csv"), history.to_csv())?;
    Ok(history)
}

fn load_model(path: &Path) -> Result<(TaggerModel, CheckpointMeta, CorpusName), CliError> {
    let (model, meta) = TaggerModel::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let corpus = meta
        .train_corpus
        .as_deref()
        .and_then(|c| c.parse::<CorpusName>().ok())
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{}: checkpoint does not name a known training corpus (ingest with --corpus)",
                path.display()
            ))
        })?;
    Ok((model, meta, corpus))
}

fn load_test(path: &Path) -> Result<Corpus, CliError> {
    let sentences = read_corpus_file(path)?;
    let name = sentences
        .first()
        .and_then(|s| s.source.corpus.parse::<CorpusName>().ok())
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{}: test corpus is empty or not a known corpus (ingest with --corpus)",
                path.display()
            ))
        })?;
    Ok(Corpus::new(name, sentences))
}

struct Cached(HashMap<String, Vec<Sentence>>);

impl Predictor for Cached {
    fn predict(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
        let Some(first) = sentences.first() else { return Ok(Vec::new()) };
        self.0
            .get(&first.source.corpus)
            .cloned()
            .ok_or_else(|| EvalError::Prediction(format!("no predictions for {}", first.source.corpus)))
    }
}

/// Write `matrix.json`, `matrix.txt` and per-cell prediction dumps under `out`.
pub fn evaluate(
    mode: &str,
    checkpoints: &[PathBuf],
    cue_checkpoints: &[PathBuf],
    tests: &[PathBuf],
    out: &Path,
) -> Result<crate::eval::CrossMatrix, CliError> {
    let mode: EvalMode = mode.parse().map_err(|e: EvalError| CliError::Usage(e.to_string()))?;
    let expected = if mode == EvalMode::Cue { Task::Cue } else { Task::Scope };
    let mut models = BTreeMap::new();
    for path in checkpoints {
        let (model, meta, corpus) = load_model(path)?;
        if model.task != expected {
            return Err(CliError::Usage(format!(
                "{}: {} checkpoint cannot be evaluated in {} mode",
                path.display(),
                model.task,
                mode.as_str()
            )));
        }
        if expected == Task::Scope && meta.strategy.is_none() {
            return Err(CliError::Usage(format!("{}: scope checkpoint lacks a strategy", path.display())));
        }
        if models.insert(corpus, (model, meta)).is_some() {
            return Err(CliError::Usage(format!("two checkpoints trained on {corpus}")));
        }
    }
    let mut cue_models = BTreeMap::new();
    if mode == EvalMode::ScopeEndToEnd {
        for path in cue_checkpoints {
            let (model, _, corpus) = load_model(path)?;
            if model.task != Task::Cue {
                return Err(CliError::Usage(format!("{}: --cue-checkpoint must be a cue model", path.display())));
            }
            cue_models.insert(corpus, model);
        }
        if let Some(missing) = models.keys().find(|c| !cue_models.contains_key(c)) {
            return Err(CliError::Usage(format!("no cue checkpoint trained on {missing}")));
        }
    }
    let test_corpora: Vec<Corpus> = tests.iter().map(|p| load_test(p)).collect::<Result<_, _>>()?;

    let mut cached = BTreeMap::new();
    for (train, (model, meta)) in &models {
        let mut per_test = HashMap::new();
        for test in &test_corpora {
            let pred = match mode {
                EvalMode::Cue => CuePredictor(model).predict(&test.sentences),
                EvalMode::ScopeGold => GoldCueScopePredictor {
                    model,
                    strategy: meta.strategy.expect("checked"),
                }
                .predict(&test.sentences),
                EvalMode::ScopeEndToEnd => {
                    EndToEndPredictor(Pipeline::new(&cue_models[train], model, meta.strategy.expect("checked")))
                        .predict(&test.sentences)
                }
            }
            .map_err(runtime)?;
            let stem = out.join("predictions").join(format!("{}__{}", test.name, train));
            let mut conll = Vec::new();
            write_cdsco(&mut conll, &pred).map_err(runtime)?;
            write_file(&stem.with_extension("cd-sco"), conll)?;
            let mut dump = Vec::new();
            write_prediction_dump(&mut dump, &pred).map_err(runtime)?;
            write_file(&stem.with_extension("jsonl"), dump)?;
            per_test.insert(test.name.to_string(), pred);
        }
        cached.insert(*train, Cached(per_test));
    }
    let trains: Vec<CorpusName> = cached.keys().copied().collect();
    let matrix = cross_matrix(mode, &cached, &trains, &test_corpora).map_err(runtime)?;
    write_file(&out.join("matrix.json"), matrix.to_json())?;
    write_file(&out.join("matrix.txt"), matrix.to_table())?;
    let mut manifest = format!("mode={}\n", mode.as_str());
    for p in checkpoints {
        manifest.push_str(&format!("checkpoint={}\n", p.display()));
    }
    for p in cue_checkpoints {
        manifest.push_str(&format!("cue_checkpoint={}\n", p.display()));
    }
    for p in tests {
        manifest.push_str(&format!("test={}\n", p.display()));
    }
    write_file(&out.join("evaluate_manifest.txt"), manifest)?;
    Ok(matrix)
}

/// Gold-cue scope predictions split by punctuation delimitation.
pub fn punct_analysis(
    checkpoint: &Path,
    test: &Path,
    symbols: Option<&str>,
    out: Option<&Path>,
) -> Result<PunctReport, CliError> {
    let symbols = symbol_set(symbols)?;
    let (model, meta) =
        TaggerModel::load(checkpoint).map_err(|e| CliError::Usage(format!("{}: {e}", checkpoint.display())))?;
    let strategy = match (model.task, meta.strategy) {
        (Task::Scope, Some(s)) => s,
        _ => {
            return Err(CliError::Usage(format!(
                "{}: punctuation analysis needs a scope checkpoint",
                checkpoint.display()
            )))
        }
    };
    let gold = read_corpus_file(test)?;
    let pred = run_gold_cues(&model, strategy, &gold).map_err(runtime)?;
    let report = punct_pcs_report(&gold, &pred.sentences, &symbols).map_err(runtime)?;
    if let Some(out) = out {
        write_file(&out.join("punct_report.json"), report.to_json())?;
        write_file(&out.join("punct_report.txt"), report.to_table())?;
        let mut f = BufWriter::new(Vec::new());
        write_prediction_dump(&mut f, &pred.sentences).map_err(runtime)?;
        write_file(&out.join("predictions.jsonl"), f.into_inner().map_err(runtime)?)?;
    }
    Ok(report)
}
