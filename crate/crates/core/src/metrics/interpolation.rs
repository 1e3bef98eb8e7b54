//! Interpolation between the top-ranked set and a set of random outside
//! tokens, one swap at a time.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use super::removal::comprehensiveness_of;
use super::sensitivity::{radius_for_set, SensitivityConfig};
use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::model::ClassifierModel;
use crate::scalar::Scalar;

/// Size of the interpolated set.
pub const INTERPOLATION_SET: usize = 4;

/// Denominators below this mark the curve as degenerate.
const DEGENERATE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InterpolationMetric {
    Comprehensiveness,
    Sensitivity(SensitivityConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationCurve {
    /// `f(0), …, f(4)`; meaningless when `degenerate` is set.
    pub values: [f64; INTERPOLATION_SET + 1],
    /// Raw metric values `M(S_0), …, M(S_4)`.
    pub raw: [f64; INTERPOLATION_SET + 1],
    /// Token sets `S_0, …, S_4`.
    pub sets: Vec<Vec<usize>>,
    pub degenerate: bool,
}

/// `f(i) = |M(S_0) − M(S_i)| / |M(S_0) − M(S_4)|`, where `S_0` holds the four
/// top-ranked tokens and `S_i` swaps its `i` least important members for
/// distinct random tokens from outside `S_0`.
pub fn interpolation_curve<T: Scalar, R: Rng + ?Sized>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    attribution: &Attribution<T>,
    metric: &InterpolationMetric,
    rng: &mut R,
) -> Result<InterpolationCurve> {
    let n = x.nrows();
    if n < 2 * INTERPOLATION_SET {
        return Err(Error::InvalidArgument(format!(
            "interpolation needs at least {} tokens, got {n}",
            2 * INTERPOLATION_SET
        )));
    }
    if attribution.len() != n {
        return Err(Error::Dimension("attribution and input lengths differ".into()));
    }
    let top = &attribution.rank[..INTERPOLATION_SET];
    let outside: Vec<usize> = attribution.rank[INTERPOLATION_SET..].to_vec();
    let picks: Vec<usize> = sample(rng, outside.len(), INTERPOLATION_SET)
        .into_iter()
        .map(|k| outside[k])
        .collect();

    let mut sets = Vec::with_capacity(INTERPOLATION_SET + 1);
    for i in 0..=INTERPOLATION_SET {
        let mut set = top[..INTERPOLATION_SET - i].to_vec();
        set.extend_from_slice(&picks[..i]);
        sets.push(set);
    }

    let mut raw = [0.0; INTERPOLATION_SET + 1];
    for (slot, set) in raw.iter_mut().zip(&sets) {
        *slot = match metric {
            InterpolationMetric::Comprehensiveness => comprehensiveness_of(model, x, set)?.as_f64(),
            InterpolationMetric::Sensitivity(cfg) => radius_for_set(model, x, set, cfg)?.radius.as_f64(),
        };
    }

    let denom = (raw[0] - raw[INTERPOLATION_SET]).abs();
    let degenerate = !denom.is_finite() || denom < DEGENERATE || raw.iter().any(|v| !v.is_finite());
    let mut values = [0.0; INTERPOLATION_SET + 1];
    if !degenerate {
        for (v, r) in values.iter_mut().zip(&raw) {
            *v = (raw[0] - r).abs() / denom;
        }
    }
    Ok(InterpolationCurve {
        values,
        raw,
        sets,
        degenerate,
    })
}
