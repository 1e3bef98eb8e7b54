//! Seed-derived randomness and class-balanced example selection.

use faithkit::corpus::Example;
use faithkit::model::NUM_CLASSES;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for drawing the evaluation sample.
pub const SAMPLING_STREAM: u64 = u64::MAX;
/// Stream for embedding rows missing from the embedding file.
pub const EMBEDDING_STREAM: u64 = u64::MAX - 1;
/// Stream for weight initialisation and shuffling during training.
pub const TRAINING_STREAM: u64 = u64::MAX - 2;
/// Purpose code used by the interpolation command.
pub const INTERPOLATION_PURPOSE: u64 = 0x100;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent generator for one (example, purpose) pair, so results for an
/// example do not depend on which other examples or methods were run.
pub fn example_rng(seed: u64, example: usize, purpose: u64) -> ChaCha8Rng {
    stream_rng(seed, ((example as u64) << 16) | (purpose & 0xffff))
}

/// Draws up to `per_class` examples of each class, without replacement, among
/// those whose length lies in `[min_len, max_len]`. Returns dataset indices in
/// increasing order.
pub fn balanced_sample(
    examples: &[Example],
    per_class: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Vec<usize> {
    let mut rng = stream_rng(seed, SAMPLING_STREAM);
    let mut chosen = Vec::new();
    for class in 0..NUM_CLASSES {
        let pool: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == class && (min_len..=max_len).contains(&e.tokens.len()))
            .map(|(i, _)| i)
            .collect();
        let take = per_class.min(pool.len());
        chosen.extend(sample(&mut rng, pool.len(), take).into_iter().map(|k| pool[k]));
    }
    chosen.sort_unstable();
    chosen
}
