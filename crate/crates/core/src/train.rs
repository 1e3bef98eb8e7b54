//! Mini-batch gradient descent on cross-entropy.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::model::{ClassifierModel, NUM_CLASSES, PAD};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub hidden: usize,
    pub embed_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            batch_size: 16,
            max_epochs: 20,
            patience: 3,
            seed: 0,
            hidden: 64,
            embed_dim: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || self.batch_size == 0
            || self.patience == 0
            || self.hidden == 0
            || self.embed_dim == 0
        {
            return Err(Error::InvalidArgument(
                "learning rate, batch size, patience, hidden and embedding sizes must be positive"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: Option<f64>,
}

pub fn accuracy<T: Scalar>(model: &ClassifierModel<T>, data: &[Example]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for ex in data {
        if model.predict(&model.embed(&ex.tokens)?)? == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Trains a model initialised from `embeddings` (PAD row forced to zero) and
/// Xavier layers drawn from `rng`.
///
/// The model with the best dev accuracy is returned; with an empty dev set
/// the final epoch's model is. Zero epochs returns the initialisation.
pub fn train<T: Scalar, R: Rng + ?Sized>(
    data: &[Example],
    dev: &[Example],
    embeddings: Array2<T>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(ClassifierModel<T>, Vec<EpochStats>)> {
    cfg.validate()?;
    if embeddings.ncols() != cfg.embed_dim {
        return Err(Error::Dimension(format!(
            "embeddings have {} columns, config expects {}",
            embeddings.ncols(),
            cfg.embed_dim
        )));
    }
    if data.len() < 2 {
        return Err(Error::DegenerateData("need at least two training examples".into()));
    }
    let mut seen = [false; NUM_CLASSES];
    for ex in data {
        if ex.label >= NUM_CLASSES {
            return Err(Error::DegenerateData(format!("label {} is not binary", ex.label)));
        }
        seen[ex.label] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::DegenerateData("training data holds a single class".into()));
    }

    let mut model = ClassifierModel::with_embeddings(embeddings, cfg.hidden, rng)?;
    let mut history = Vec::new();
    let mut best: Option<(f64, ClassifierModel<T>)> = None;
    let mut stale = 0usize;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let lr = T::of(cfg.learning_rate);

    for epoch in 0..cfg.max_epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, hits) = step(&mut model, data, batch, lr)?;
            loss_sum += loss;
            correct += hits;
        }
        let dev_accuracy = if dev.is_empty() {
            None
        } else {
            Some(accuracy(&model, dev)?)
        };
        history.push(EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            dev_accuracy,
        });
        log::debug!("epoch {}: {:?}", epoch + 1, history.last());

        if let Some(acc) = dev_accuracy {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }
    let model = match best {
        Some((_, m)) => m,
        None => model,
    };
    Ok((model, history))
}

/// One averaged-gradient update over `batch`. Returns (summed loss, correct
/// predictions) measured before the update.
fn step<T: Scalar>(
    model: &mut ClassifierModel<T>,
    data: &[Example],
    batch: &[usize],
    lr: T,
) -> Result<(f64, usize)> {
    let (h, d) = (model.hidden(), model.embed_dim());
    let mut gw1 = Array2::<T>::zeros((h, d));
    let mut gb1 = Array1::<T>::zeros(h);
    let mut gw2 = Array2::<T>::zeros((h, h));
    let mut gb2 = Array1::<T>::zeros(h);
    let mut gw3 = Array2::<T>::zeros((NUM_CLASSES, h));
    let mut gb3 = Array1::<T>::zeros(NUM_CLASSES);
    let mut gemb: Vec<(usize, Array1<T>)> = Vec::new();
    let mut loss = 0.0;
    let mut correct = 0;

    for &i in batch {
        let ex = &data[i];
        let e = model.embed(&ex.tokens)?;
        let trace = model.forward(&e)?;
        let p = trace.probs[ex.label].as_f64().max(1e-300);
        loss -= p.ln();
        if trace.label == ex.label {
            correct += 1;
        }
        let mut g = trace.probs.clone();
        g[ex.label] -= T::one();
        let grads = model.backward(&e, &trace, &g);
        gw1 += &grads.w1;
        gb1 += &grads.b1;
        gw2 += &grads.w2;
        gb2 += &grads.b2;
        gw3 += &grads.w3;
        gb3 += &grads.b3;
        for (row, &id) in ex.tokens.ids().iter().enumerate() {
            if id != PAD {
                gemb.push((id, grads.embeds.row(row).to_owned()));
            }
        }
    }

    let scale = lr / T::from_usize(batch.len()).unwrap();
    let p = model.parts_mut();
    p.w1.scaled_add(-scale, &gw1);
    p.b1.scaled_add(-scale, &gb1);
    p.w2.scaled_add(-scale, &gw2);
    p.b2.scaled_add(-scale, &gb2);
    p.w3.scaled_add(-scale, &gw3);
    p.b3.scaled_add(-scale, &gb3);
    for (id, g) in gemb {
        p.embedding.row_mut(id).scaled_add(-scale, &g);
    }
    let finite = p.w1.iter().chain(p.w2.iter()).chain(p.w3.iter()).all(|v| v.is_finite())
        && p.embedding.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::Numeric("training diverged".into()));
    }
    Ok((loss, correct))
}
