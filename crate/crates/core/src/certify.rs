//! Linear bounds on a class logit over a Frobenius ball of input embeddings.
//!
//! Intermediate pre-activation bounds come from interval bound propagation;
//! the final linear bounds are built by propagating coefficients backward
//! from the logit through the ReLU relaxations:
//!
//! | pre-activation bounds | lower line     | upper line          |
//! |-----------------------|----------------|---------------------|
//! | `u ≤ 0` (dead)        | `0`            | `0`                 |
//! | `l ≥ 0` (stable)      | `z`            | `z`                 |
//! | `l < 0 < u`           | `λ z`, λ ∈ {0,1} | `u (z − l) / (u − l)` |
//!
//! λ = 1 iff `u ≥ −l`.

use ndarray::{Array1, Array2, Axis, Zip};

use crate::attribution::{Attribution, Method};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::model::{relu, ClassifierModel, NUM_CLASSES};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig<T> {
    /// Frobenius radius over the whole embedding matrix.
    pub radius: T,
    /// Logit to bound; `None` means the clean prediction.
    pub target: Option<usize>,
}

impl<T: Scalar> Default for CertifyConfig<T> {
    fn default() -> Self {
        Self {
            radius: T::of(0.1),
            target: None,
        }
    }
}

/// Elementwise `[lower, upper]` bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<A> {
    pub lower: A,
    pub upper: A,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBounds<T> {
    /// `n × h`
    pub z1: Interval<Array2<T>>,
    pub a1: Interval<Array2<T>>,
    pub pooled: Interval<Array1<T>>,
    pub z2: Interval<Array1<T>>,
    pub a2: Interval<Array1<T>>,
}

/// `W̲·e + b̲ ≤ logit ≤ W̄·e + b̄` for every `e` in the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBounds<T> {
    pub lower_weights: Array2<T>,
    pub lower_bias: T,
    pub upper_weights: Array2<T>,
    pub upper_bias: T,
}

fn check_radius<T: Scalar>(radius: T) -> Result<()> {
    if !(radius >= T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidArgument("certification radius must be finite and ≥ 0".into()));
    }
    Ok(())
}

/// Affine layer `w·v + b` over a box, split by weight sign.
fn affine_interval<T: Scalar>(
    w: &Array2<T>,
    b: &Array1<T>,
    lo: &Array1<T>,
    hi: &Array1<T>,
) -> Interval<Array1<T>> {
    let pos = w.mapv(|v| v.max(T::zero()));
    let neg = w.mapv(|v| v.min(T::zero()));
    Interval {
        lower: pos.dot(lo) + neg.dot(hi) + b,
        upper: pos.dot(hi) + neg.dot(lo) + b,
    }
}

/// Interval bounds on every hidden layer over the ball of `radius` around `x`.
///
/// A first-layer unit only sees its own token's row, so its half-width is
/// `radius · ‖W1_j‖₂`.
pub fn ibp_bounds<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    radius: T,
) -> Result<IntervalBounds<T>> {
    check_radius(radius)?;
    let trace = model.forward(x)?;
    let p = model.parts();
    let half: Array1<T> = p.w1.axis_iter(Axis(0)).map(|r| radius * norm(&r)).collect();
    let z1 = Interval {
        lower: &trace.z1 - &half,
        upper: &trace.z1 + &half,
    };
    let a1 = Interval {
        lower: z1.lower.mapv(relu),
        upper: z1.upper.mapv(relu),
    };
    let n = T::from_usize(x.nrows()).unwrap();
    let pooled = Interval {
        lower: a1.lower.sum_axis(Axis(0)) / n,
        upper: a1.upper.sum_axis(Axis(0)) / n,
    };
    let z2 = affine_interval(&p.w2, &p.b2, &pooled.lower, &pooled.upper);
    let a2 = Interval {
        lower: z2.lower.mapv(relu),
        upper: z2.upper.mapv(relu),
    };
    Ok(IntervalBounds {
        z1,
        a1,
        pooled,
        z2,
        a2,
    })
}

/// Relaxation `(slope, intercept)` of a ReLU with pre-activation bounds
/// `[l, u]`, chosen to lower-bound `coef · relu(z)`.
fn relax<T: Scalar>(coef: T, l: T, u: T) -> (T, T) {
    if u <= T::zero() {
        (T::zero(), T::zero())
    } else if l >= T::zero() {
        (T::one(), T::zero())
    } else if coef >= T::zero() {
        let slope = if u >= -l { T::one() } else { T::zero() };
        (slope, T::zero())
    } else {
        let s = u / (u - l);
        (s, -s * l)
    }
}

/// Linear lower bound `W·e + b` on `cᵀ logits`.
fn backward_lower<T: Scalar>(
    model: &ClassifierModel<T>,
    ibp: &IntervalBounds<T>,
    c: &Array1<T>,
) -> (Array2<T>, T) {
    let p = model.parts();
    let mut bias = c.dot(&p.b3);

    let lam_a2 = p.w3.t().dot(c);
    let mut lam_z2 = Array1::<T>::zeros(lam_a2.len());
    for j in 0..lam_a2.len() {
        let (s, t) = relax(lam_a2[j], ibp.z2.lower[j], ibp.z2.upper[j]);
        lam_z2[j] = lam_a2[j] * s;
        bias += lam_a2[j] * t;
    }

    let lam_pooled = p.w2.t().dot(&lam_z2);
    bias += lam_z2.dot(&p.b2);
    let n = T::from_usize(ibp.z1.lower.nrows()).unwrap();
    let lam_a1 = lam_pooled / n;

    let mut lam_z1 = Array2::<T>::zeros(ibp.z1.lower.raw_dim());
    Zip::indexed(&mut lam_z1)
        .and(&ibp.z1.lower)
        .and(&ibp.z1.upper)
        .for_each(|(_, j), out, &l, &u| {
            let coef = lam_a1[j];
            let (s, t) = relax(coef, l, u);
            *out = coef * s;
            bias += coef * t;
        });

    bias += lam_z1.dot(&p.b1).sum();
    (lam_z1.dot(&p.w1), bias)
}

fn target_logit<T: Scalar>(model: &ClassifierModel<T>, x: &Array2<T>, cfg: &CertifyConfig<T>) -> Result<usize> {
    match cfg.target {
        Some(t) if t >= NUM_CLASSES => Err(Error::InvalidArgument(format!("target logit {t} out of range"))),
        Some(t) => Ok(t),
        None => model.predict(x),
    }
}

/// Backward linear bounds on the target logit over the ball of `cfg.radius`.
pub fn backward_bounds<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &CertifyConfig<T>,
) -> Result<LinearBounds<T>> {
    let target = target_logit(model, x, cfg)?;
    let ibp = ibp_bounds(model, x, cfg.radius)?;
    let mut c = Array1::<T>::zeros(NUM_CLASSES);
    c[target] = T::one();
    let (lower_weights, lower_bias) = backward_lower(model, &ibp, &c);
    let (neg_w, neg_b) = backward_lower(model, &ibp, &c.mapv(|v| -v));
    Ok(LinearBounds {
        lower_weights,
        lower_bias,
        upper_weights: -neg_w,
        upper_bias: -neg_b,
    })
}

/// Worst case of each linear function over the ball: `(lower, upper)`.
pub fn concretize<T: Scalar>(bounds: &LinearBounds<T>, x: &Array2<T>, radius: T) -> Result<(T, T)> {
    if bounds.lower_weights.dim() != x.dim() || bounds.upper_weights.dim() != x.dim() {
        return Err(Error::Dimension("bounds and input shapes differ".into()));
    }
    let lower = (&bounds.lower_weights * x).sum() + bounds.lower_bias - radius * norm(&bounds.lower_weights);
    let upper = (&bounds.upper_weights * x).sum() + bounds.upper_bias + radius * norm(&bounds.upper_weights);
    Ok((lower, upper))
}

/// `W̲_i · e(x_i)` for the clean predicted logit.
pub fn attribute_certify<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &CertifyConfig<T>,
) -> Result<Attribution<T>> {
    let cfg = CertifyConfig {
        radius: cfg.radius,
        target: None,
    };
    let bounds = backward_bounds(model, x, &cfg)?;
    let scores = (&bounds.lower_weights * x).sum_axis(Axis(1));
    Attribution::new(Method::Certify, scores)
}
