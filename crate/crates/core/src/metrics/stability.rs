//! Stability: the lowest rank correlation between the attribution of `x` and
//! that of a synonym-substituted contrast example the model scores almost
//! identically.

use ndarray::Array2;

use super::stats::{average_ranks, spearman};
use crate::attribution::Attribution;
use crate::corpus::{SynonymLexicon, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{ClassifierModel, TokenSequence};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    /// Maximum number of accepted substitutions.
    pub max_substitutions: usize,
    /// Largest admissible change of `s_y`.
    pub tau: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            max_substitutions: 4,
            tau: 0.1,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidArgument(format!("tau {} not in [0, 1]", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityResult {
    /// Spearman correlation between the two rankings; 1.0 when nothing was
    /// substituted.
    pub spearman: f64,
    /// Accepted `(position, replacement token)` pairs, in order.
    pub substitutions: Vec<(usize, String)>,
    pub contrast: TokenSequence,
}

/// Rank correlation between two attributions of equal length.
///
/// Scores are ranked with ties averaged; if either ranking is constant the
/// strict total-order positions are compared instead.
pub fn rank_correlation<T: Scalar>(a: &Attribution<T>, b: &Attribution<T>) -> Result<f64> {
    let ra = average_ranks(a.scores.as_slice().unwrap_or(&a.scores.to_vec()));
    let rb = average_ranks(b.scores.as_slice().unwrap_or(&b.scores.to_vec()));
    match spearman(&ra, &rb) {
        Err(Error::Undefined(_)) if ra.len() >= 2 => {
            let pa: Vec<f64> = a.positions().iter().map(|&p| p as f64).collect();
            let pb: Vec<f64> = b.positions().iter().map(|&p| p as f64).collect();
            spearman(&pa, &pb)
        }
        other => other,
    }
}

/// Greedy contrast-example search.
///
/// Tokens are visited in decreasing importance under `method(e(x))`. For each
/// one, every in-vocabulary synonym is tried on the current contrast example;
/// candidates that move `s_y` by more than `tau` are discarded and the
/// survivor with the lowest correlation is kept if it strictly lowers the
/// current value. The search ends after `max_substitutions` acceptances or
/// once every token has been visited.
///
/// `method` is called as a black box with the same settings on every input.
pub fn stability<T, F>(
    model: &ClassifierModel<T>,
    x: &TokenSequence,
    vocab: &Vocabulary,
    lexicon: &SynonymLexicon,
    cfg: &StabilityConfig,
    mut method: F,
) -> Result<StabilityResult>
where
    T: Scalar,
    F: FnMut(&Array2<T>) -> Result<Attribution<T>>,
{
    cfg.validate()?;
    let mut result = StabilityResult {
        spearman: 1.0,
        substitutions: Vec::new(),
        contrast: x.clone(),
    };
    if x.len() < 2 || cfg.max_substitutions == 0 || lexicon.is_empty() {
        return Ok(result);
    }
    let clean = model.embed(x)?;
    let y = model.predict(&clean)?;
    let clean_score = model.score(&clean, y)?.as_f64();
    let reference = method(&clean)?;

    for &pos in &reference.rank {
        if result.substitutions.len() >= cfg.max_substitutions {
            break;
        }
        let word = &x.tokens()[pos];
        let mut best: Option<(f64, TokenSequence, String)> = None;
        for syn in lexicon.synonyms(word) {
            let Some(id) = vocab.get(syn) else { continue };
            let candidate = result.contrast.substituted(pos, syn, id);
            let embeds = model.embed(&candidate)?;
            if (model.score(&embeds, y)?.as_f64() - clean_score).abs() > cfg.tau {
                continue;
            }
            let rho = rank_correlation(&reference, &method(&embeds)?)?;
            if best.as_ref().is_none_or(|(b, _, _)| rho < *b) {
                best = Some((rho, candidate, syn.clone()));
            }
        }
        if let Some((rho, candidate, syn)) = best {
            if rho < result.spearman {
                result.spearman = rho;
                result.contrast = candidate;
                result.substitutions.push((pos, syn));
            }
        }
    }
    Ok(result)
}
