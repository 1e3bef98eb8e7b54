//! Perturbation-based methods: occlusion and LIME. A perturbed token has its
//! embedding row set to zero.

use ndarray::{Array1, Array2};
use rand::Rng;

use super::{Attribution, Method};
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::model::ClassifierModel;
use crate::scalar::Scalar;

/// `s_y(x) − s_y(x with row i zeroed)`.
pub fn attribute_occlusion<T: Scalar>(model: &ClassifierModel<T>, x: &Array2<T>) -> Result<Attribution<T>> {
    let trace = model.forward(x)?;
    let y = trace.label;
    let clean = trace.probs[y];
    let mut scores = Array1::zeros(x.nrows());
    let mut work = x.clone();
    for i in 0..x.nrows() {
        work.row_mut(i).fill(T::zero());
        scores[i] = clean - model.score(&work, y)?;
        work.row_mut(i).assign(&x.row(i));
    }
    Attribution::new(Method::Occlusion, scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimeConfig {
    /// Number of masks, the all-ones mask included.
    pub samples: usize,
    /// Width of the exponential kernel on cosine distance.
    pub kernel_width: f64,
    /// Ridge penalty (intercept unpenalised).
    pub ridge: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            kernel_width: 0.25,
            ridge: 1e-3,
        }
    }
}

/// Weighted linear surrogate fitted by LIME.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel<T> {
    pub weights: Array1<T>,
    pub intercept: T,
    /// Weighted coefficient of determination of the fit.
    pub r2: T,
}

/// `exp(−d² / width²)` where `d` is the cosine distance between `mask` and
/// the all-ones mask. The empty mask has distance 1.
pub fn lime_kernel(mask: &[bool], width: f64) -> f64 {
    let kept = mask.iter().filter(|&&b| b).count();
    let dist = if kept == 0 {
        1.0
    } else {
        1.0 - (kept as f64 / mask.len() as f64).sqrt()
    };
    (-(dist * dist) / (width * width)).exp()
}

/// Weighted ridge regression with an unpenalised intercept.
///
/// A singular normal system is retried with the penalty raised tenfold, at
/// most three times.
pub fn fit_weighted_ridge<T: Scalar>(
    features: &Array2<T>,
    targets: &Array1<T>,
    weights: &Array1<T>,
    ridge: T,
) -> Result<SurrogateModel<T>> {
    let (s, n) = features.dim();
    if targets.len() != s || weights.len() != s {
        return Err(Error::Dimension("features, targets and weights disagree".into()));
    }
    let wsum: T = weights.sum();
    if !(wsum > T::zero()) {
        return Err(Error::Numeric("sample weights sum to zero".into()));
    }
    let x_mean = weights.dot(features) / wsum;
    let y_mean = weights.dot(targets) / wsum;
    let xc = features - &x_mean;
    let yc = targets - y_mean;
    let wx = &xc * &weights.view().insert_axis(ndarray::Axis(1));
    let gram = wx.t().dot(&xc);
    let rhs = wx.t().dot(&yc);

    let mut lambda = ridge;
    let mut coef = None;
    for _ in 0..4 {
        let mut a = gram.clone();
        for i in 0..n {
            a[[i, i]] += lambda;
        }
        if let Some(sol) = cholesky_solve(&a, &rhs) {
            coef = Some(sol);
            break;
        }
        lambda *= T::of(10.0);
    }
    let coef = coef.ok_or_else(|| Error::Numeric("ridge system singular after retries".into()))?;
    let intercept = y_mean - x_mean.dot(&coef);
    let resid = &yc - &xc.dot(&coef);
    let ss_res: T = weights.dot(&(&resid * &resid));
    let ss_tot: T = weights.dot(&(&yc * &yc));
    let r2 = if ss_tot > T::zero() {
        T::one() - ss_res / ss_tot
    } else {
        T::one()
    };
    Ok(SurrogateModel {
        weights: coef,
        intercept,
        r2,
    })
}

/// Fits the LIME surrogate around `x`.
pub fn lime_surrogate<T: Scalar, R: Rng + ?Sized>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &LimeConfig,
    rng: &mut R,
) -> Result<SurrogateModel<T>> {
    let n = x.nrows();
    if cfg.samples < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "LIME needs at least n + 1 = {} samples, got {}",
            n + 1,
            cfg.samples
        )));
    }
    let y = model.predict(x)?;
    let mut features = Array2::<T>::zeros((cfg.samples, n));
    let mut targets = Array1::<T>::zeros(cfg.samples);
    let mut weights = Array1::<T>::zeros(cfg.samples);
    let mut mask = vec![true; n];
    let mut work = x.clone();
    for s in 0..cfg.samples {
        if s > 0 {
            for b in mask.iter_mut() {
                *b = rng.random_bool(0.5);
            }
        }
        for (i, &keep) in mask.iter().enumerate() {
            if keep {
                features[[s, i]] = T::one();
                work.row_mut(i).assign(&x.row(i));
            } else {
                work.row_mut(i).fill(T::zero());
            }
        }
        targets[s] = model.score(&work, y)?;
        weights[s] = T::of(lime_kernel(&mask, cfg.kernel_width));
    }
    fit_weighted_ridge(&features, &targets, &weights, T::of(cfg.ridge))
}

pub fn attribute_lime<T: Scalar, R: Rng + ?Sized>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &LimeConfig,
    rng: &mut R,
) -> Result<Attribution<T>> {
    let fit = lime_surrogate(model, x, cfg, rng)?;
    Attribution::new(Method::Lime, fit.weights)
}
