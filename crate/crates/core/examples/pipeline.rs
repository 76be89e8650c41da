//! Two-stage prediction: a cue model finds cues, then a scope model is run
//! once per predicted cue.
//!
//!     cargo run --release --example pipeline

use negscope::corpus::Sentence;
use negscope::decode::Pipeline;
use negscope::encoding::{encode_cue_task, encode_scope_task, MarkStrategy, Task};
use negscope::synthetic::negation_corpus;
use negscope::tagger::{make_backend, train, BackendSpec, TaggerModel, TrainConfig};

fn fit(task: Task, corpus: &[Sentence]) -> Result<TaggerModel, Box<dyn std::error::Error>> {
    let backend = make_backend(&BackendSpec::TestSmall { hidden: 32 }, 3)?;
    let (tr, dv) = corpus.split_at(corpus.len() * 4 / 5);
    let encode = |s: &[Sentence]| match task {
        Task::Cue => encode_cue_task(s, &backend.tokenizer, 32),
        Task::Scope => encode_scope_task(s, MarkStrategy::Augment, &backend.tokenizer, 32),
    };
    let (tr, dv) = (encode(tr), encode(dv));
    let mut model = TaggerModel::new(backend, task, 32, 3)?;
    let mut config = TrainConfig::for_task(task);
    config.learning_rate = 1e-2;
    config.patience_epochs = 3;
    let h = train(&mut model, &tr.examples, &dv.examples, &config)?;
    println!("{task} model: dev F1 {:.3} after {} epochs", h.best_f1(), h.epochs.len());
    Ok(model)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = negation_corpus(300, 3);
    let cue = fit(Task::Cue, &corpus)?;
    let scope = fit(Task::Scope, &corpus)?;
    let pipeline = Pipeline::new(&cue, &scope, MarkStrategy::Augment);

    for text in ["the dog was not home .", "we saw a careless cat on the mat .", "neither the cat nor the dog ran ."] {
        let words: Vec<&str> = text.split(' ').collect();
        let out = pipeline.run(&Sentence::from_words(&words))?;
        println!("\n{text}");
        for inst in &out.instances {
            let cue: Vec<&str> = inst.cue.word_indices().map(|w| words[w]).collect();
            let scope: Vec<&str> = inst.scope.iter().map(|&w| words[w]).collect();
            println!("  {:?} cue {cue:?} scope {scope:?}", inst.cue.class);
        }
    }
    Ok(())
}
