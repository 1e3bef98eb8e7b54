use std::path::PathBuf;

use faithkit::checkpoint::save_checkpoint;
use faithkit::corpus::{load_embeddings, load_texts, Vocabulary};
use faithkit::train::{train, EpochStats};
use faithkit::Model;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::sampling::{stream_rng, EMBEDDING_STREAM, TRAINING_STREAM};
use crate::workspace::{lift, vocab_path};

#[derive(Debug)]
pub struct TrainSummary {
    pub model: Model,
    pub vocab: Vocabulary,
    pub history: Vec<EpochStats>,
    /// Best dev accuracy, if a dev set was given.
    pub dev_accuracy: Option<f64>,
}

/// Builds the vocabulary from the training texts and trains a model.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainSummary> {
    let train_path = cfg.require(&cfg.train_data, "train_data")?;
    let emb_path = cfg.require(&cfg.embeddings, "embeddings")?;
    let texts = load_texts(train_path).map_err(lift("training data"))?;
    let dev_texts = match &cfg.dev_data {
        Some(p) => load_texts(p).map_err(lift("dev data"))?,
        None => Vec::new(),
    };
    let vocab = Vocabulary::build(&texts);
    let embeddings =
        load_embeddings::<f64, _>(emb_path, &vocab, &mut stream_rng(cfg.seed, EMBEDDING_STREAM))
            .map_err(lift("embeddings"))?;
    let data = vocab.encode_all(&texts);
    let dev = vocab.encode_all(&dev_texts);
    let mut tc = cfg.train.clone();
    tc.embed_dim = embeddings.ncols();
    tc.seed = cfg.seed;
    let (model, history) = train(&data, &dev, embeddings, &tc, &mut stream_rng(cfg.seed, TRAINING_STREAM))
        .map_err(lift("training"))?;
    let dev_accuracy = history
        .iter()
        .filter_map(|h| h.dev_accuracy)
        .fold(None, |best: Option<f64>, a| Some(best.map_or(a, |b| b.max(a))));
    Ok(TrainSummary {
        model,
        vocab,
        history,
        dev_accuracy,
    })
}

/// Writes the checkpoint and its vocabulary sidecar; returns the checkpoint path.
pub fn save_trained(summary: &TrainSummary, cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<PathBuf> {
    let path = match out {
        Some(p) => p,
        None => cfg.require(&cfg.checkpoint, "checkpoint")?.to_path_buf(),
    };
    save_checkpoint(&summary.model, &path).map_err(lift("checkpoint"))?;
    summary.vocab.save(vocab_path(&path)).map_err(lift("vocabulary"))?;
    Ok(path)
}
