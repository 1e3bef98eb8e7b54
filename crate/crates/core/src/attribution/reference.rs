//! Reference-based methods: integrated gradients and DeepLIFT (Rescale).
//! The reference defaults to the all-zero embedding matrix.

use ndarray::{Array1, Array2, Zip};

use super::{row_dots, Attribution, Method};
use crate::error::{Error, Result};
use crate::model::{relu_grad, ClassifierModel};
use crate::scalar::Scalar;

/// Below this `|z − z_ref|` the Rescale multiplier falls back to the local
/// gradient.
pub const DEEPLIFT_STABILIZER: f64 = 1e-9;

fn resolve_baseline<T: Scalar>(x: &Array2<T>, baseline: Option<&Array2<T>>) -> Result<Array2<T>> {
    match baseline {
        None => Ok(Array2::zeros(x.raw_dim())),
        Some(b) if b.dim() == x.dim() => Ok(b.clone()),
        Some(b) => Err(Error::Dimension(format!(
            "baseline is {:?}, input is {:?}",
            b.dim(),
            x.dim()
        ))),
    }
}

/// Right Riemann sum of the gradient along the straight path from the
/// baseline, times `(x − baseline)`, summed over each token's coordinates.
pub fn attribute_inggrad<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    steps: usize,
    baseline: Option<&Array2<T>>,
) -> Result<Attribution<T>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("integrated gradients needs ≥ 1 step".into()));
    }
    let y = model.predict(x)?;
    let base = resolve_baseline(x, baseline)?;
    let delta = x - &base;
    let m = T::from_usize(steps).unwrap();
    let mut total = Array2::<T>::zeros(x.raw_dim());
    for j in 1..=steps {
        let alpha = T::from_usize(j).unwrap() / m;
        let point = &base + &(&delta * alpha);
        total += &model.grad_embeddings(&point, y)?;
    }
    total /= m;
    Attribution::new(Method::IngGrad, row_dots(&total, &delta))
}

/// Rescale multiplier `Δa / Δz` for one ReLU unit.
fn rescale<T: Scalar>(z: T, z_ref: T) -> T {
    let dz = z - z_ref;
    if dz.abs() < T::of(DEEPLIFT_STABILIZER) {
        relu_grad(z)
    } else {
        let relu = |v: T| v.max(T::zero());
        (relu(z) - relu(z_ref)) / dz
    }
}

/// DeepLIFT with the Rescale rule.
///
/// The softmax output is handled through the binary margin
/// `logit_y − logit_other`: its multiplier is `Δs_y / Δmargin`, so the scores
/// sum to `s_y(x) − s_y(baseline)`.
pub fn attribute_deeplift<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    baseline: Option<&Array2<T>>,
) -> Result<Attribution<T>> {
    let base = resolve_baseline(x, baseline)?;
    let tx = model.forward(x)?;
    let tr = model.forward(&base)?;
    let y = tx.label;
    let other = 1 - y;
    let p = model.parts();

    let margin = |l: &Array1<T>| l[y] - l[other];
    let d_margin = margin(&tx.logits) - margin(&tr.logits);
    let d_score = tx.probs[y] - tr.probs[y];
    let m_margin = if d_margin.abs() < T::of(DEEPLIFT_STABILIZER) {
        tx.probs[y] * tx.probs[other]
    } else {
        d_score / d_margin
    };
    let mut m_logits = Array1::<T>::zeros(2);
    m_logits[y] = m_margin;
    m_logits[other] = -m_margin;

    let m_a2 = p.w3.t().dot(&m_logits);
    let m_z2 = Zip::from(&m_a2)
        .and(&tx.z2)
        .and(&tr.z2)
        .map_collect(|&m, &z, &zr| m * rescale(z, zr));
    let m_pooled = p.w2.t().dot(&m_z2);
    let n = T::from_usize(x.nrows()).unwrap();
    let m_a1 = m_pooled / n;
    let mut m_z1 = Zip::from(&tx.z1)
        .and(&tr.z1)
        .map_collect(|&z, &zr| rescale(z, zr));
    m_z1 *= &m_a1;
    let m_e = m_z1.dot(&p.w1);
    Attribution::new(Method::DeepLift, row_dots(&m_e, &(x - &base)))
}
