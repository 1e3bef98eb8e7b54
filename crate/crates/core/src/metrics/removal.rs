use ndarray::Array2;

use super::RelevantSet;
use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::model::ClassifierModel;
use crate::scalar::Scalar;

/// Copy of `x` with the listed rows replaced by the PAD embedding (zero).
pub fn replace_rows<T: Scalar>(x: &Array2<T>, rows: impl IntoIterator<Item = usize>) -> Array2<T> {
    let mut out = x.clone();
    for i in rows {
        out.row_mut(i).fill(T::zero());
    }
    out
}

fn check_rows(n: usize, rows: &[usize]) -> Result<()> {
    if let Some(&bad) = rows.iter().find(|&&i| i >= n) {
        return Err(Error::Dimension(format!("token index {bad} ≥ length {n}")));
    }
    Ok(())
}

/// `s_y(x) − s_y(x with `rows` padded)`.
pub fn comprehensiveness_of<T: Scalar>(model: &ClassifierModel<T>, x: &Array2<T>, rows: &[usize]) -> Result<T> {
    check_rows(x.nrows(), rows)?;
    let trace = model.forward(x)?;
    let y = trace.label;
    Ok(trace.probs[y] - model.score(&replace_rows(x, rows.iter().copied()), y)?)
}

/// `s_y(x) − s_y(x with everything except `rows` padded)`.
pub fn sufficiency_of<T: Scalar>(model: &ClassifierModel<T>, x: &Array2<T>, rows: &[usize]) -> Result<T> {
    check_rows(x.nrows(), rows)?;
    let trace = model.forward(x)?;
    let y = trace.label;
    let keep: std::collections::HashSet<usize> = rows.iter().copied().collect();
    let dropped = (0..x.nrows()).filter(|i| !keep.contains(i));
    Ok(trace.probs[y] - model.score(&replace_rows(x, dropped), y)?)
}

pub fn comprehensiveness<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    attribution: &Attribution<T>,
    q: f64,
) -> Result<T> {
    let set = RelevantSet::top(attribution, q)?;
    comprehensiveness_of(model, x, &set.indices)
}

pub fn sufficiency<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    attribution: &Attribution<T>,
    q: f64,
) -> Result<T> {
    let set = RelevantSet::top(attribution, q)?;
    sufficiency_of(model, x, &set.indices)
}

/// Arithmetic mean of the per-threshold values (one per entry of
/// [`THRESHOLDS`](super::THRESHOLDS) by default, any non-empty set of thresholds otherwise).
pub fn removal_auc<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(values.iter().copied().sum::<T>() / T::from_usize(values.len()).unwrap())
}
