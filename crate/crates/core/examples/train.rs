//! Train a cue tagger with the small backend on a synthetic corpus, save
//! it, reload it and compare predictions.
//!
//!     cargo run --release --example train

use negscope::encoding::{encode_cue_task, Task};
use negscope::synthetic::negation_corpus;
use negscope::tagger::{accuracy, make_backend, train, BackendSpec, CheckpointMeta, TaggerModel, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = negation_corpus(200, 11);
    let (train_s, dev_s) = corpus.split_at(160);
    let backend = make_backend(&BackendSpec::TestSmall { hidden: 32 }, 11)?;
    let train_set = encode_cue_task(train_s, &backend.tokenizer, 32);
    let dev_set = encode_cue_task(dev_s, &backend.tokenizer, 32);

    let mut model = TaggerModel::new(backend, Task::Cue, 32, 11)?;
    let mut config = TrainConfig::for_task(Task::Cue);
    config.learning_rate = 1e-2;
    config.patience_epochs = 3;
    let history = train(&mut model, &train_set.examples, &dev_set.examples, &config)?;
    print!("{}", history.to_csv());
    println!(
        "best epoch {} (dev F1 {:.3}), stopped early: {}",
        history.best_epoch,
        history.best_f1(),
        history.stopped_early
    );

    let dir = std::env::temp_dir().join("negscope-example-cue");
    model.save(&dir, &CheckpointMeta::default())?;
    let (loaded, _) = TaggerModel::load(&dir)?;
    let dists = loaded.predict_distributions(&dev_set.examples)?;
    println!("reloaded from {}: dev accuracy {:.3}", dir.display(), accuracy(Task::Cue, &dev_set.examples, &dists));
    Ok(())
}
