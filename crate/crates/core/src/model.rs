//! The fixed-architecture text classifier.
//!
//! ```text
//! e_i ──W1,b1──► z1_i ──ReLU──► a1_i ──mean──► p ──W2,b2──► z2 ──ReLU──► a2 ──W3,b3──► logits ──softmax──► probs
//! ```
//!
//! Every layer is affine or ReLU, so the network is decomposable by the
//! reference-based attribution rules and boundable by the linear relaxation in
//! [`crate::certify`]. Gradients are derived by hand; no autodiff.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Vocabulary id of the padding token. Its embedding row is always zero.
pub const PAD: usize = 0;
/// Vocabulary id of the unknown-word token.
pub const UNK: usize = 1;
/// The classifier is strictly binary.
pub const NUM_CLASSES: usize = 2;

/// A tokenized input: surface forms plus their vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
    ids: Vec<usize>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>, ids: Vec<usize>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        if tokens.len() != ids.len() {
            return Err(Error::Dimension(format!(
                "{} tokens but {} ids",
                tokens.len(),
                ids.len()
            )));
        }
        Ok(Self { tokens, ids })
    }

    /// Builds a sequence whose surface forms are the decimal ids; handy for
    /// synthetic inputs that have no text.
    pub fn from_ids(ids: Vec<usize>) -> Result<Self> {
        let tokens = ids.iter().map(|i| format!("#{i}")).collect();
        Self::new(tokens, ids)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Copy of `self` with position `pos` replaced.
    pub fn substituted(&self, pos: usize, token: &str, id: usize) -> Self {
        let mut out = self.clone();
        out.tokens[pos] = token.to_string();
        out.ids[pos] = id;
        out
    }
}

/// Raw parameter blocks of a [`ClassifierModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParts<T> {
    /// `|V| × d`
    pub embedding: Array2<T>,
    /// `h × d`
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    /// `h × h`
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    /// `C × h`
    pub w3: Array2<T>,
    pub b3: Array1<T>,
}

/// Embedding → per-token affine+ReLU → mean pool → affine+ReLU → affine → softmax.
///
/// Construction validates shapes, finiteness, and the zero PAD row, so a
/// `ClassifierModel` in hand always satisfies those invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<T> {
    parts: ModelParts<T>,
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    /// `n × h`
    pub z1: Array2<T>,
    /// `n × h`
    pub a1: Array2<T>,
    pub pooled: Array1<T>,
    pub z2: Array1<T>,
    pub a2: Array1<T>,
    pub logits: Array1<T>,
    pub probs: Array1<T>,
    /// Predicted class; ties go to the lower index.
    pub label: usize,
}

/// Parameter gradients, same layout as [`ModelParts`] minus the embedding
/// table (embedding gradients are returned per input row).
#[derive(Debug, Clone)]
pub struct LayerGrads<T> {
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    pub w3: Array2<T>,
    pub b3: Array1<T>,
    /// `n × d` gradient with respect to the input embeddings.
    pub embeds: Array2<T>,
}

pub(crate) fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// ReLU derivative with subgradient 0 at the kink.
pub(crate) fn relu_grad<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Scalar>(v: &Array1<T>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax<T: Scalar>(logits: &Array1<T>) -> Array1<T> {
    let max = logits.fold(T::neg_infinity(), |m, &x| m.max(x));
    let exp = logits.mapv(|x| (x - max).exp());
    let total: T = exp.sum();
    exp / total
}

fn all_finite<'a, T: Scalar>(mut it: impl Iterator<Item = &'a T>) -> bool {
    it.all(|v| v.is_finite())
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn new(parts: ModelParts<T>) -> Result<Self> {
        let (v, d) = parts.embedding.dim();
        let h = parts.w1.nrows();
        let shape_err = |what: &str| Err(Error::Dimension(what.to_string()));
        if v < 2 || d == 0 || h == 0 {
            return shape_err("vocabulary must hold PAD and UNK; d and h must be positive");
        }
        if parts.w1.ncols() != d {
            return shape_err("w1 must be h × d");
        }
        if parts.b1.len() != h {
            return shape_err("b1 must have length h");
        }
        if parts.w2.dim() != (h, h) || parts.b2.len() != h {
            return shape_err("w2 must be h × h and b2 length h");
        }
        if parts.w3.dim() != (NUM_CLASSES, h) || parts.b3.len() != NUM_CLASSES {
            return shape_err("w3 must be 2 × h and b3 length 2");
        }
        let finite = all_finite(parts.embedding.iter())
            && all_finite(parts.w1.iter())
            && all_finite(parts.b1.iter())
            && all_finite(parts.w2.iter())
            && all_finite(parts.b2.iter())
            && all_finite(parts.w3.iter())
            && all_finite(parts.b3.iter());
        if !finite {
            return Err(Error::NonFinite("model parameters"));
        }
        if parts.embedding.row(PAD).iter().any(|&x| x != T::zero()) {
            return Err(Error::InvalidArgument(
                "PAD embedding row must be zero".into(),
            ));
        }
        Ok(Self { parts })
    }

    /// Xavier-uniform layers around a supplied embedding table. The PAD row is
    /// zeroed.
    pub fn with_embeddings<R: Rng + ?Sized>(
        mut embedding: Array2<T>,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let d = embedding.ncols();
        if embedding.nrows() > PAD {
            embedding.row_mut(PAD).fill(T::zero());
        }
        let mut xavier = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| T::of(rng.random_range(-limit..limit)))
        };
        let w1 = xavier(hidden, d);
        let w2 = xavier(hidden, hidden);
        let w3 = xavier(NUM_CLASSES, hidden);
        Self::new(ModelParts {
            embedding,
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(hidden),
            w3,
            b3: Array1::zeros(NUM_CLASSES),
        })
    }

    /// Fully random model: embeddings uniform in (−0.1, 0.1) plus Xavier layers.
    pub fn random<R: Rng + ?Sized>(vocab: usize, dim: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let embedding =
            Array2::from_shape_fn((vocab, dim), |_| T::of(rng.random_range(-0.1..0.1)));
        Self::with_embeddings(embedding, hidden, rng)
    }

    pub fn parts(&self) -> &ModelParts<T> {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts<T> {
        self.parts
    }

    pub fn vocab_size(&self) -> usize {
        self.parts.embedding.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.parts.embedding.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.parts.w1.nrows()
    }

    /// Gathers embedding rows for `ids`.
    pub fn embed_ids(&self, ids: &[usize]) -> Result<Array2<T>> {
        if ids.is_empty() {
            return Err(Error::EmptyInput);
        }
        let v = self.vocab_size();
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(Error::Dimension(format!("token id {bad} ≥ vocabulary size {v}")));
        }
        Ok(self.parts.embedding.select(Axis(0), ids))
    }

    pub fn embed(&self, seq: &TokenSequence) -> Result<Array2<T>> {
        self.embed_ids(seq.ids())
    }

    fn check_input(&self, embeds: ArrayView2<T>) -> Result<()> {
        if embeds.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if embeds.ncols() != self.embed_dim() {
            return Err(Error::Dimension(format!(
                "input has {} columns, model expects {}",
                embeds.ncols(),
                self.embed_dim()
            )));
        }
        if !all_finite(embeds.iter()) {
            return Err(Error::NonFinite("input embeddings"));
        }
        Ok(())
    }

    pub fn forward(&self, embeds: &Array2<T>) -> Result<ForwardTrace<T>> {
        self.check_input(embeds.view())?;
        let p = &self.parts;
        let n = T::from_usize(embeds.nrows()).unwrap();
        let z1 = embeds.dot(&p.w1.t()) + &p.b1;
        let a1 = z1.mapv(relu);
        let pooled = a1.sum_axis(Axis(0)) / n;
        let z2 = p.w2.dot(&pooled) + &p.b2;
        let a2 = z2.mapv(relu);
        let logits = p.w3.dot(&a2) + &p.b3;
        let probs = softmax(&logits);
        let label = argmax(&logits);
        Ok(ForwardTrace {
            z1,
            a1,
            pooled,
            z2,
            a2,
            logits,
            probs,
            label,
        })
    }

    pub fn predict(&self, embeds: &Array2<T>) -> Result<usize> {
        Ok(self.forward(embeds)?.label)
    }

    /// Softmax probability of `target`.
    pub fn score(&self, embeds: &Array2<T>, target: usize) -> Result<T> {
        check_target(target)?;
        Ok(self.forward(embeds)?.probs[target])
    }

    /// `∂ probs[target] / ∂ embeds`.
    pub fn grad_embeddings(&self, embeds: &Array2<T>, target: usize) -> Result<Array2<T>> {
        Ok(self.score_and_grad(embeds, target)?.1)
    }

    /// Forward trace together with `∂ probs[target] / ∂ embeds`.
    pub fn score_and_grad(
        &self,
        embeds: &Array2<T>,
        target: usize,
    ) -> Result<(ForwardTrace<T>, Array2<T>)> {
        check_target(target)?;
        let trace = self.forward(embeds)?;
        let g = prob_grad_logits(&trace.probs, target);
        let grad = self.backprop_embeds(&trace, &g);
        Ok((trace, grad))
    }

    /// `∂ logits[target] / ∂ embeds`.
    pub fn logit_grad_embeddings(&self, embeds: &Array2<T>, target: usize) -> Result<Array2<T>> {
        check_target(target)?;
        let trace = self.forward(embeds)?;
        let mut g = Array1::zeros(NUM_CLASSES);
        g[target] = T::one();
        Ok(self.backprop_embeds(&trace, &g))
    }

    /// `∂ (logits[target] − logits[other]) / ∂ embeds`. For two classes this
    /// is parallel to `∂ probs[target] / ∂ embeds` (the factor is
    /// `p_target · p_other > 0`) but does not underflow when the softmax
    /// saturates.
    pub fn margin_grad_embeddings(&self, embeds: &Array2<T>, target: usize) -> Result<Array2<T>> {
        check_target(target)?;
        let trace = self.forward(embeds)?;
        Ok(self.backprop_embeds(&trace, &margin_direction(target)))
    }

    /// Gradient of the pooled representation path, given the upstream
    /// gradient on `p`. Returns the `n × h` gradient on `z1`.
    fn grad_z1(&self, trace: &ForwardTrace<T>, g_pooled: &Array1<T>) -> Array2<T> {
        let n = T::from_usize(trace.z1.nrows()).unwrap();
        let g_a1 = g_pooled / n;
        let mut g_z1 = trace.z1.mapv(relu_grad);
        g_z1 *= &g_a1;
        g_z1
    }

    fn backprop_embeds(&self, trace: &ForwardTrace<T>, g_logits: &Array1<T>) -> Array2<T> {
        let p = &self.parts;
        let g_a2 = p.w3.t().dot(g_logits);
        let g_z2 = &g_a2 * &trace.z2.mapv(relu_grad);
        let g_pooled = p.w2.t().dot(&g_z2);
        let g_z1 = self.grad_z1(trace, &g_pooled);
        g_z1.dot(&p.w1)
    }

    /// Full backward pass for an upstream gradient on the logits. Used by the
    /// trainer.
    pub fn backward(
        &self,
        embeds: &Array2<T>,
        trace: &ForwardTrace<T>,
        g_logits: &Array1<T>,
    ) -> LayerGrads<T> {
        let p = &self.parts;
        let w3 = outer(g_logits, &trace.a2);
        let g_a2 = p.w3.t().dot(g_logits);
        let g_z2 = &g_a2 * &trace.z2.mapv(relu_grad);
        let w2 = outer(&g_z2, &trace.pooled);
        let g_pooled = p.w2.t().dot(&g_z2);
        let g_z1 = self.grad_z1(trace, &g_pooled);
        let w1 = g_z1.t().dot(embeds);
        let b1 = g_z1.sum_axis(Axis(0));
        let embeds_grad = g_z1.dot(&p.w1);
        LayerGrads {
            w1,
            b1,
            w2,
            b2: g_z2,
            w3,
            b3: g_logits.clone(),
            embeds: embeds_grad,
        }
    }

    pub(crate) fn parts_mut(&mut self) -> &mut ModelParts<T> {
        &mut self.parts
    }
}

fn check_target(target: usize) -> Result<()> {
    if target >= NUM_CLASSES {
        return Err(Error::InvalidArgument(format!(
            "target class {target} out of range"
        )));
    }
    Ok(())
}

/// `e_target − e_other` over the two logits.
pub(crate) fn margin_direction<T: Scalar>(target: usize) -> Array1<T> {
    Array1::from_shape_fn(NUM_CLASSES, |k| if k == target { T::one() } else { -T::one() })
}

/// `∂ probs[t] / ∂ logits`. Uses `1 − p_t = Σ_{k≠t} p_k` so saturated
/// probabilities keep a non-zero gradient.
pub(crate) fn prob_grad_logits<T: Scalar>(probs: &Array1<T>, target: usize) -> Array1<T> {
    let pt = probs[target];
    Array1::from_shape_fn(probs.len(), |k| {
        if k == target {
            let rest: T = probs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != target)
                .map(|(_, &v)| v)
                .sum();
            pt * rest
        } else {
            -pt * probs[k]
        }
    })
}

fn outer<T: Scalar>(a: &Array1<T>, b: &Array1<T>) -> Array2<T> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}
