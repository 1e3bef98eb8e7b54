//! Loading the trained model, its vocabulary and the evaluation inputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use faithkit::checkpoint::load_checkpoint_for_vocab;
use faithkit::corpus::{load_synonyms, load_texts, Example, SynonymLexicon, Vocabulary};
use faithkit::Model;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::sampling::balanced_sample;

/// `<checkpoint>.vocab`, written next to every checkpoint.
pub fn vocab_path(checkpoint: &Path) -> PathBuf {
    let mut name: OsString = checkpoint.as_os_str().to_owned();
    name.push(".vocab");
    PathBuf::from(name)
}

/// Maps a core error to a harness error, keeping I/O failures as I/O.
pub(crate) fn lift(context: &str) -> impl FnOnce(faithkit::Error) -> HarnessError + '_ {
    move |e| match e {
        faithkit::Error::Io { path, source } => HarnessError::io(path, source),
        other => HarnessError::core(context, other),
    }
}

pub struct Workspace {
    pub model: Model,
    pub vocab: Vocabulary,
    pub lexicon: SynonymLexicon,
    pub examples: Vec<Example>,
}

impl Workspace {
    /// Checkpoint, vocabulary sidecar, evaluation data and (when configured)
    /// the synonym lexicon.
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let ckpt = cfg.require(&cfg.checkpoint, "checkpoint")?;
        let eval = cfg.require(&cfg.eval_data, "eval_data")?;
        let vocab = Vocabulary::load(vocab_path(ckpt)).map_err(lift("vocabulary"))?;
        let model = load_checkpoint_for_vocab(ckpt, vocab.len()).map_err(lift("checkpoint"))?;
        let texts = load_texts(eval).map_err(lift("evaluation data"))?;
        let lexicon = match &cfg.synonyms {
            Some(p) => load_synonyms(p).map_err(lift("synonyms"))?,
            None => SynonymLexicon::new(),
        };
        Ok(Self {
            model,
            examples: vocab.encode_all(&texts),
            vocab,
            lexicon,
        })
    }

    /// The class-balanced evaluation sample, as dataset indices.
    pub fn sample(&self, cfg: &ExperimentConfig, per_class: usize, min_len: usize) -> Result<Vec<usize>> {
        let picked = balanced_sample(&self.examples, per_class, min_len, cfg.max_length, cfg.seed);
        if picked.is_empty() {
            return Err(HarnessError::core(
                "sampling",
                faithkit::Error::DegenerateData("no evaluation example passes the length filter".into()),
            ));
        }
        Ok(picked)
    }
}
