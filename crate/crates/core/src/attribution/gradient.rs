use ndarray::{Array1, Array2, Axis};

use super::{row_dots, Attribution, Method};
use crate::error::Result;
use crate::linalg::norm;
use crate::model::ClassifierModel;
use crate::scalar::Scalar;

/// `‖∂s_y/∂e(x_i)‖₂` per token.
pub fn attribute_vagrad<T: Scalar>(model: &ClassifierModel<T>, x: &Array2<T>) -> Result<Attribution<T>> {
    let y = model.predict(x)?;
    let g = model.grad_embeddings(x, y)?;
    let scores: Array1<T> = g.axis_iter(Axis(0)).map(|row| norm(&row)).collect();
    Attribution::new(Method::VaGrad, scores)
}

/// `(∂s_y/∂e(x_i))ᵀ e(x_i)` per token.
pub fn attribute_gradinp<T: Scalar>(model: &ClassifierModel<T>, x: &Array2<T>) -> Result<Attribution<T>> {
    let y = model.predict(x)?;
    let g = model.grad_embeddings(x, y)?;
    Attribution::new(Method::GradInp, row_dots(&g, x))
}
