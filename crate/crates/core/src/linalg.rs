//! Small dense helpers not covered by ndarray.

use ndarray::{Array1, Array2, ArrayBase, Data, Dimension};

use crate::scalar::Scalar;

/// Euclidean / Frobenius norm, scaled by the largest magnitude so that tiny
/// (saturated) gradients do not underflow to zero.
pub fn norm<T: Scalar, S: Data<Elem = T>, D: Dimension>(a: &ArrayBase<S, D>) -> T {
    let scale = a.fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let sum: T = a.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * sum.sqrt()
}

/// Rescales `delta` in place onto the Frobenius ball of `radius` if it lies
/// outside.
pub fn project_onto_ball<T: Scalar>(delta: &mut Array2<T>, radius: T) {
    let len = norm(delta);
    if len > radius {
        *delta *= radius / len;
    }
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky
/// factorisation. Returns `None` when a pivot is not strictly positive.
pub fn cholesky_solve<T: Scalar>(a: &Array2<T>, b: &Array1<T>) -> Option<Array1<T>> {
    let n = a.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / ljj;
        }
    }
    let mut y = Array1::<T>::zeros(n);
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[[i, k]] * y[k];
        }
        y[i] = v / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v -= l[[k, i]] * x[k];
        }
        x[i] = v / l[[i, i]];
    }
    Some(x)
}
