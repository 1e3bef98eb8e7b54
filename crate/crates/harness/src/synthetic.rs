//! A ready-to-run experiment directory built from the synthetic corpus.

use std::path::{Path, PathBuf};

use faithkit::synthetic::{generate, write_corpus, SyntheticConfig};

use crate::error::Result;
use crate::evaluate::write_file;
use crate::sampling::stream_rng;
use crate::workspace::lift;

/// Writes the corpus files plus `experiment.cfg` pointing at them and
/// returns the config path. `extra` is appended verbatim to the config.
pub fn write_experiment(dir: &Path, corpus: &SyntheticConfig, seed: u64, extra: &str) -> Result<PathBuf> {
    let data = generate(corpus, &mut stream_rng(seed, 0)).map_err(lift("synthetic corpus"))?;
    write_corpus(&data, dir).map_err(lift("synthetic corpus"))?;
    let cfg = format!(
        "# synthetic sentiment experiment\n\
         train_data = train.tsv\n\
         dev_data = dev.tsv\n\
         eval_data = test.tsv\n\
         embeddings = embeddings.txt\n\
         synonyms = synonyms.tsv\n\
         checkpoint = model.ckpt\n\
         output = report.json\n\
         seed = {seed}\n\
         {extra}"
    );
    let path = dir.join("experiment.cfg");
    write_file(&path, &cfg)?;
    Ok(path)
}
