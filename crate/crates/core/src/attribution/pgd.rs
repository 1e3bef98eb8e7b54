//! Robustness-based attributions: a fixed-radius projected descent on `s_y`
//! over the whole sentence, read out per token.

use ndarray::{Array1, Array2, Axis};

use super::{row_dots, Attribution, Method};
use crate::error::{Error, Result};
use crate::linalg::{norm, project_onto_ball};
use crate::model::ClassifierModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PgdConfig<T> {
    /// Frobenius radius of the ball around `e(x)`.
    pub radius: T,
    pub iterations: usize,
    pub step: T,
}

impl<T: Scalar> PgdConfig<T> {
    /// Radius `ε` with 50 iterations and step `ε / 5`.
    pub fn with_radius(radius: T) -> Self {
        Self {
            radius,
            iterations: 50,
            step: radius / T::of(5.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= T::zero()) || self.iterations == 0 || !(self.step > T::zero()) {
            return Err(Error::InvalidArgument(
                "PGD needs radius ≥ 0, iterations ≥ 1 and step > 0".into(),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for PgdConfig<T> {
    fn default() -> Self {
        Self::with_radius(T::of(0.5))
    }
}

/// Runs `iterations` projected steps of
/// `e ← Π(e − step · ∇s_y(e) / ‖∇s_y(e)‖_F)` starting from `x`, with `y` the
/// clean prediction. No early stopping; the prediction need not flip.
///
/// The step is taken along the unit-Frobenius gradient direction, so the
/// iterate moves even where `s_y` is saturated. The direction is obtained from
/// the logit margin, which is parallel to `∇s_y` for a binary classifier.
pub fn pgd_descend<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &PgdConfig<T>,
) -> Result<Array2<T>> {
    Ok(x + &pgd_perturbation(model, x, cfg)?)
}

/// The cumulative perturbation `e⁽ᵗ⁾ − e(x)` found by [`pgd_descend`].
pub fn pgd_perturbation<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &PgdConfig<T>,
) -> Result<Array2<T>> {
    cfg.validate()?;
    let y = model.predict(x)?;
    let mut delta = Array2::<T>::zeros(x.raw_dim());
    let mut point = x.clone();
    for _ in 0..cfg.iterations {
        let g = model.margin_grad_embeddings(&point, y)?;
        let len = norm(&g);
        if len == T::zero() {
            break;
        }
        delta.scaled_add(-cfg.step / len, &g);
        project_onto_ball(&mut delta, cfg.radius);
        point = x + &delta;
    }
    Ok(delta)
}

/// `‖e⁽ᵗ⁾_i − e(x_i)‖₂`.
pub fn attribute_vapgd<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &PgdConfig<T>,
) -> Result<Attribution<T>> {
    let delta = pgd_perturbation(model, x, cfg)?;
    let scores: Array1<T> = delta.axis_iter(Axis(0)).map(|r| norm(&r)).collect();
    Attribution::new(Method::VaPgd, scores)
}

/// `(e(x_i) − e⁽ᵗ⁾_i)ᵀ e(x_i)`.
pub fn attribute_pgdinp<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &PgdConfig<T>,
) -> Result<Attribution<T>> {
    let delta = pgd_perturbation(model, x, cfg)?;
    Attribution::new(Method::PgdInp, row_dots(&(-delta), x))
}
