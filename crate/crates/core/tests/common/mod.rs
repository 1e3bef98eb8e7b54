#![allow(dead_code)]

use faithkit::model::{ClassifierModel, ModelParts};
use faithkit::synthetic::linear_collapse_model;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, half: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-half..=half))
}

pub fn random_model(rng: &mut impl Rng, d: usize, h: usize) -> ClassifierModel<f64> {
    // Non-zero biases so hidden units are not all centred on their kink.
    let mut parts = ClassifierModel::<f64>::random(6, d, h, rng).unwrap().into_parts();
    parts.b1 = Array1::from_shape_fn(h, |_| rng.random_range(-0.2..0.2));
    parts.b2 = Array1::from_shape_fn(h, |_| rng.random_range(-0.2..0.2));
    parts.b3 = Array1::from_shape_fn(2, |_| rng.random_range(-0.5..0.5));
    ClassifierModel::new(parts).unwrap()
}

pub fn collapse_model(rng: &mut impl Rng, d: usize, h: usize) -> ClassifierModel<f64> {
    linear_collapse_model(6, d, h, rng).unwrap()
}

/// Model whose logits are both constant.
pub fn constant_model(rng: &mut impl Rng, d: usize, h: usize) -> ClassifierModel<f64> {
    let mut parts = random_model(rng, d, h).into_parts();
    parts.w3.fill(0.0);
    parts.b3 = ndarray::array![0.3, -0.2];
    ClassifierModel::new(parts).unwrap()
}

pub fn with_parts(model: &ClassifierModel<f64>, edit: impl FnOnce(&mut ModelParts<f64>)) -> ClassifierModel<f64> {
    let mut parts = model.parts().clone();
    edit(&mut parts);
    ClassifierModel::new(parts).unwrap()
}

/// End-to-end linear map of logit `k` in the all-active regime, written as
/// explicit loops: `u = W1ᵀ W2ᵀ w3_k`, and its offset
/// `w3_k · (W2 b1 + b2) + b3_k`. The logit is `u · mean(e) + offset`.
pub fn logit_map(model: &ClassifierModel<f64>, k: usize) -> (Vec<f64>, f64) {
    let p = model.parts();
    let (h, d) = p.w1.dim();
    let mut t = vec![0.0; h];
    for j in 0..h {
        for i in 0..h {
            t[j] += p.w2[[i, j]] * p.w3[[k, i]];
        }
    }
    let mut u = vec![0.0; d];
    for c in 0..d {
        for j in 0..h {
            u[c] += p.w1[[j, c]] * t[j];
        }
    }
    let mut offset = p.b3[k];
    for i in 0..h {
        let mut a2 = p.b2[i];
        for j in 0..h {
            a2 += p.w2[[i, j]] * p.b1[j];
        }
        offset += p.w3[[k, i]] * a2;
    }
    (u, offset)
}

/// Margin `logit_k − logit_other` of a collapse model as `(v, c)` with
/// margin = `v · mean(e) + c`.
pub fn margin_map(model: &ClassifierModel<f64>, k: usize) -> (Vec<f64>, f64) {
    let (uk, ok) = logit_map(model, k);
    let (uo, oo) = logit_map(model, 1 - k);
    (uk.iter().zip(&uo).map(|(a, b)| a - b).collect(), ok - oo)
}

pub fn dot(a: &[f64], b: impl IntoIterator<Item = f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Oracle margin of a collapse model at `x` toward class `k`.
pub fn oracle_margin(model: &ClassifierModel<f64>, x: &Array2<f64>, k: usize) -> f64 {
    let (v, c) = margin_map(model, k);
    let n = x.nrows() as f64;
    let total: f64 = x.rows().into_iter().map(|r| dot(&v, r.iter().copied())).sum();
    total / n + c
}
