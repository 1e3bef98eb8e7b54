//! Per-token importance scores for a single model decision.
//!
//! Every method explains `s_y`, the softmax probability of the clean
//! prediction `y`, with respect to the rows of the input embedding matrix.

mod gradient;
mod perturbation;
mod pgd;
mod reference;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::certify::{attribute_certify, CertifyConfig};
use crate::error::{Error, Result};
use crate::model::ClassifierModel;
use crate::scalar::Scalar;

pub use gradient::{attribute_gradinp, attribute_vagrad};
pub use perturbation::{
    attribute_lime, attribute_occlusion, fit_weighted_ridge, lime_kernel, lime_surrogate,
    LimeConfig, SurrogateModel,
};
pub use pgd::{attribute_pgdinp, attribute_vapgd, pgd_descend, pgd_perturbation, PgdConfig};
pub use reference::{attribute_deeplift, attribute_inggrad, DEEPLIFT_STABILIZER};

/// Importance scores plus the induced importance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution<T> {
    pub method: Method,
    pub scores: Array1<T>,
    /// Token indices, most important first.
    pub rank: Vec<usize>,
}

impl<T: Scalar> Attribution<T> {
    pub fn new(method: Method, scores: Array1<T>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyInput);
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("attribution scores"));
        }
        let rank = rank_of(scores.as_slice().expect("contiguous"));
        Ok(Self {
            method,
            scores,
            rank,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Position of every token in the importance order (0 = most important).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.rank.len()];
        for (p, &i) in self.rank.iter().enumerate() {
            pos[i] = p;
        }
        pos
    }
}

/// Indices sorted by decreasing score; equal scores keep ascending index order.
pub fn rank_of<T: PartialOrd>(scores: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Random,
    VaGrad,
    GradInp,
    Occlusion,
    Lime,
    IngGrad,
    DeepLift,
    PgdInp,
    VaPgd,
    Certify,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Random,
        Method::VaGrad,
        Method::GradInp,
        Method::Occlusion,
        Method::Lime,
        Method::IngGrad,
        Method::DeepLift,
        Method::PgdInp,
        Method::VaPgd,
        Method::Certify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::VaGrad => "vagrad",
            Method::GradInp => "gradinp",
            Method::Occlusion => "occlusion",
            Method::Lime => "lime",
            Method::IngGrad => "inggrad",
            Method::DeepLift => "deeplift",
            Method::PgdInp => "pgdinp",
            Method::VaPgd => "vapgd",
            Method::Certify => "certify",
        }
    }

    /// Whether repeated calls on the same input can differ.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Random | Method::Lime)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown attribution method `{s}`")))
    }
}

/// Hyperparameters for every method, defaulting to the reference settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig<T> {
    /// Riemann steps for integrated gradients.
    pub ig_steps: usize,
    pub lime: LimeConfig,
    pub pgd: PgdConfig<T>,
    pub certify: CertifyConfig<T>,
}

impl<T: Scalar> Default for MethodConfig<T> {
    fn default() -> Self {
        Self {
            ig_steps: 50,
            lime: LimeConfig::default(),
            pgd: PgdConfig::default(),
            certify: CertifyConfig::default(),
        }
    }
}

/// Draws iid uniform [0, 1) scores.
pub fn attribute_random<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Attribution<T>> {
    let scores = Array1::from_shape_fn(n, |_| T::of(rng.random::<f64>()));
    Attribution::new(Method::Random, scores)
}

/// Runs `method` on input embeddings `x`. `rng` is only drawn from by the
/// stochastic methods.
pub fn attribute<T: Scalar, R: Rng + ?Sized>(
    method: Method,
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    cfg: &MethodConfig<T>,
    rng: &mut R,
) -> Result<Attribution<T>> {
    match method {
        Method::Random => attribute_random(x.nrows(), rng),
        Method::VaGrad => attribute_vagrad(model, x),
        Method::GradInp => attribute_gradinp(model, x),
        Method::IngGrad => attribute_inggrad(model, x, cfg.ig_steps, None),
        Method::DeepLift => attribute_deeplift(model, x, None),
        Method::Occlusion => attribute_occlusion(model, x),
        Method::Lime => attribute_lime(model, x, &cfg.lime, rng),
        Method::VaPgd => attribute_vapgd(model, x, &cfg.pgd),
        Method::PgdInp => attribute_pgdinp(model, x, &cfg.pgd),
        Method::Certify => attribute_certify(model, x, &cfg.certify),
    }
}

/// Row-wise dot product `Σ_k a[i,k] · b[i,k]`.
pub(crate) fn row_dots<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> Array1<T> {
    (a * b).sum_axis(ndarray::Axis(1))
}
