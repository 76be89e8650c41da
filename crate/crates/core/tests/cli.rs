mod common;

use std::fs;
use std::path::Path;

use negscope::cli::{self, run_from_args, Format};

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["negscope"];
    v.extend_from_slice(args);
    run_from_args(v)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// (sentences, negated sentences, instances) counted from the raw columns.
fn count_cdsco(text: &str) -> (usize, usize, usize) {
    let mut sentences = 0;
    let mut negated = 0;
    let mut instances = 0;
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        sentences += 1;
        let first = block.lines().next().unwrap();
        let cols = first.split('\t').count();
        if !first.ends_with("***") {
            negated += 1;
            instances += (cols - 7) / 3;
        }
    }
    (sentences, negated, instances)
}

#[test]
fn ingest_counts_match_the_raw_columns() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["sherlock_train.txt", "sherlock_dev.txt"] {
        let path = common::fixture(name);
        let text = fs::read_to_string(&path).unwrap();
        let summary = cli::ingest(Format::Cdsco, &path, &dir.path().join("out.jsonl"), Some("sherlock-train")).unwrap();
        assert_eq!(
            (summary.sentences, summary.negated_sentences, summary.instances),
            count_cdsco(&text),
            "{name}"
        );
        assert_eq!(summary.affix_cues + summary.normal_cues + summary.multiword_cues, summary.instances);
        assert!(dir.path().join("out.jsonl.summary.json").exists());
    }
}

#[test]
fn sfu_directory_keeps_document_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sfu.jsonl");
    assert_eq!(run(&["ingest", "--format", "sfu", "--input", p(&common::fixture("sfu")), "--out", p(&out)]), 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"document\":\"BOOKS/no1\""));
    assert!(text.contains("\"document\":\"CARS/yes2\""));
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.jsonl");
    assert_eq!(run(&["ingest", "--format", "conll", "--input", "a", "--out", p(&out)]), 2);
    assert_eq!(run(&["ingest", "--format", "cdsco", "--input", "/no/such/file", "--out", p(&out)]), 2);
    assert_eq!(run(&["train", "--task", "scope"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);

    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "task=cue\nwarmup=3\n").unwrap();
    assert_eq!(run(&["train", "--config", p(&conf)]), 2);
}

#[test]
fn malformed_input_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "doc\t0\t0\tHello\n").unwrap();
    assert_eq!(run(&["ingest", "--format", "cdsco", "--input", p(&bad), "--out", p(&dir.path().join("o.jsonl"))]), 1);
}

#[test]
fn empty_file_ingests_to_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("e.jsonl");
    assert_eq!(run(&["ingest", "--format", "cdsco", "--input", p(&empty), "--out", p(&out)]), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e.jsonl.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["sentences"], 0);
    assert_eq!(summary["instances"], 0);
}

#[test]
fn full_workflow_with_the_small_backend() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let train = d.join("train.jsonl");
    let dev = d.join("dev.jsonl");
    let abs = d.join("abs.jsonl");
    let ingest = |fmt: &str, input: &str, out: &Path, corpus: &str| {
        run(&["ingest", "--format", fmt, "--input", p(&common::fixture(input)), "--out", p(out), "--corpus", corpus])
    };
    assert_eq!(ingest("cdsco", "sherlock_train.txt", &train, "sherlock-train"), 0);
    assert_eq!(ingest("cdsco", "sherlock_dev.txt", &dev, "sherlock-dev"), 0);
    assert_eq!(ingest("bioscope", "bioscope_abstracts.xml", &abs, "bioscope-abstracts"), 0);

    let split_dir = d.join("split");
    assert_eq!(run(&["split", "--input", p(&abs), "--out", p(&split_dir), "--seed", "3"]), 0);
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "split_manifest.txt"] {
        assert!(split_dir.join(f).exists(), "{f}");
    }

    let conf = d.join("scope.conf");
    fs::write(&conf, format!("# scope model\ntask=scope\nstrategy=augment\nmax_epochs=50\ntrain={}\n", p(&train))).unwrap();
    let scope_ckpt = d.join("scope");
    let cue_ckpt = d.join("cue");
    let common_flags = ["--dev", p(&dev), "--max-epochs", "2", "--patience-epochs", "1", "--batch-size", "4", "--learning-rate", "0.01"];
    let mut args = vec!["train", "--config", p(&conf), "--out", p(&scope_ckpt)];
    args.extend(common_flags);
    assert_eq!(run(&args), 0);
    let mut args = vec!["train", "--task", "cue", "--train", p(&train), "--out", p(&cue_ckpt)];
    args.extend(common_flags);
    assert_eq!(run(&args), 0);

    let recorded = fs::read_to_string(scope_ckpt.join("experiment.conf")).unwrap();
    assert!(recorded.contains("max_epochs=2"), "flags override the config file");
    let history = fs::read_to_string(scope_ckpt.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);

    let eval = d.join("eval");
    let tests = ["--test", p(&dev), "--test", p(&abs)];
    let mut args = vec!["evaluate", "--mode", "scope-e2e", "--checkpoint", p(&scope_ckpt), "--cue-checkpoint", p(&cue_ckpt), "--out", p(&eval)];
    args.extend(tests);
    assert_eq!(run(&args), 0);
    let matrix: serde_json::Value = serde_json::from_str(&fs::read_to_string(eval.join("matrix.json")).unwrap()).unwrap();
    assert_eq!(matrix["rows"].as_array().unwrap().len(), 2);
    assert_eq!(matrix["columns"][0], "sherlock-train");
    assert!(eval.join("predictions/bioscope-abstracts__sherlock-train.cd-sco").exists());
    assert!(eval.join("matrix.txt").exists());

    let (eval_cue, bad) = (d.join("eval_cue"), d.join("bad"));
    let mut args = vec!["evaluate", "--mode", "cue", "--checkpoint", p(&cue_ckpt), "--out", p(&eval_cue)];
    args.extend(tests);
    assert_eq!(run(&args), 0);

    // a cue checkpoint in a scope mode is a usage error
    let mut args = vec!["evaluate", "--mode", "scope-gold", "--checkpoint", p(&cue_ckpt), "--out", p(&bad)];
    args.extend(tests);
    assert_eq!(run(&args), 2);

    let punct = d.join("punct");
    assert_eq!(
        run(&["punct-analysis", "--checkpoint", p(&scope_ckpt), "--test", p(&abs), "--out", p(&punct)]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(punct.join("punct_report.json")).unwrap()).unwrap();
    let total = report["punct"]["instances"].as_u64().unwrap() + report["nopunct"]["instances"].as_u64().unwrap();
    assert_eq!(total, report["overall"]["instances"].as_u64().unwrap());
}
