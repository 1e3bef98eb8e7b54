//! Sensitivity: the smallest Frobenius perturbation, restricted to the
//! relevant tokens, that flips the prediction. Approximated by a masked PGD
//! attack inside a doubling-then-bisection search over the radius.

use ndarray::{Array1, Array2, Axis};

use super::{RelevantSet, THRESHOLDS};
use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::linalg::{norm, project_onto_ball};
use crate::model::{argmax, margin_direction, relu, relu_grad, ClassifierModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityConfig {
    /// PGD iterations per attack.
    pub iterations: usize,
    /// PGD step length along the unit gradient direction.
    pub step: f64,
    /// First radius tried.
    pub start: f64,
    /// Number of doublings before giving up (largest radius `start · 2^doublings`).
    pub doublings: u32,
    pub bisections: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            step: 1.0,
            start: 1.0,
            doublings: 10,
            bisections: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome<T> {
    pub success: bool,
    /// Last iterate (the first flipping one on success).
    pub embeddings: Array2<T>,
    pub iterations_run: usize,
}

/// Model restricted to perturbations of a fixed row subset: the unmasked rows'
/// pooled contribution is computed once.
struct MaskedObjective<'a, T> {
    model: &'a ClassifierModel<T>,
    rows: Vec<usize>,
    /// Clean embeddings of the masked rows, `|M| × d`.
    base: Array2<T>,
    fixed_pool: Array1<T>,
    n: T,
    target: usize,
}

impl<'a, T: Scalar> MaskedObjective<'a, T> {
    fn new(model: &'a ClassifierModel<T>, x: &Array2<T>, rows: &[usize], target: usize) -> Self {
        let p = model.parts();
        let mut in_mask = vec![false; x.nrows()];
        for &r in rows {
            in_mask[r] = true;
        }
        let mut fixed_pool = Array1::<T>::zeros(model.hidden());
        for (i, row) in x.axis_iter(Axis(0)).enumerate() {
            if !in_mask[i] {
                let a = (p.w1.dot(&row) + &p.b1).mapv(relu);
                fixed_pool += &a;
            }
        }
        Self {
            model,
            rows: rows.to_vec(),
            base: x.select(Axis(0), rows),
            fixed_pool,
            n: T::from_usize(x.nrows()).unwrap(),
            target,
        }
    }

    /// Predicted label and the direction of `∂ s_target / ∂ delta` at
    /// `base + delta` (taken through the logit margin, see
    /// [`ClassifierModel::margin_grad_embeddings`]).
    fn eval(&self, delta: &Array2<T>) -> (usize, Array2<T>) {
        let p = self.model.parts();
        let e = &self.base + delta;
        let z1 = e.dot(&p.w1.t()) + &p.b1;
        let pooled = (&self.fixed_pool + &z1.mapv(relu).sum_axis(Axis(0))) / self.n;
        let z2 = p.w2.dot(&pooled) + &p.b2;
        let a2 = z2.mapv(relu);
        let logits = p.w3.dot(&a2) + &p.b3;
        let label = argmax(&logits);
        let g_logits = margin_direction::<T>(self.target);
        let g_z2 = p.w3.t().dot(&g_logits) * z2.mapv(relu_grad);
        let g_a1 = p.w2.t().dot(&g_z2) / self.n;
        let mut g_z1 = z1.mapv(relu_grad);
        g_z1 *= &g_a1;
        (label, g_z1.dot(&p.w1))
    }
}

fn check_mask(n: usize, mask: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("attack mask is empty".into()));
    }
    let mut seen = vec![false; n];
    for &i in mask {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!("bad mask index {i}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Projected descent on `s_y` over the rows in `mask`, within a Frobenius
/// ball of `radius`, starting from zero perturbation. Each step moves `step`
/// along the unit gradient direction. Stops at the first iterate whose
/// prediction differs from the clean one.
pub fn pgd_attack<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    mask: &[usize],
    radius: T,
    iterations: usize,
    step: T,
) -> Result<AttackOutcome<T>> {
    check_mask(x.nrows(), mask)?;
    if !(radius >= T::zero()) {
        return Err(Error::InvalidArgument("attack radius must be ≥ 0".into()));
    }
    let y = model.predict(x)?;
    let objective = MaskedObjective::new(model, x, mask, y);
    let mut delta = Array2::<T>::zeros(objective.base.raw_dim());
    let (_, mut grad) = objective.eval(&delta);
    let mut before: Option<Array2<T>> = None;
    let mut success = false;
    let mut run = 0;
    for it in 0..iterations {
        run = it + 1;
        let len = norm(&grad);
        if len == T::zero() {
            break;
        }
        let previous = delta.clone();
        delta.scaled_add(-step / len, &grad);
        project_onto_ball(&mut delta, radius);
        if delta == previous || before.as_ref() == Some(&delta) {
            // A fixed point or a 2-cycle: later iterates repeat ones already
            // checked, so the attack cannot succeed any more.
            break;
        }
        before = Some(previous);
        let (label, g) = objective.eval(&delta);
        grad = g;
        if label != y {
            success = true;
            break;
        }
    }
    let mut embeddings = x.clone();
    for (k, &r) in objective.rows.iter().enumerate() {
        embeddings.row_mut(r).assign(&(&objective.base.row(k) + &delta.row(k)));
    }
    Ok(AttackOutcome {
        success,
        embeddings,
        iterations_run: run,
    })
}

/// Result of the radius search for one relevant set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRadius<T> {
    /// Smallest succeeding radius found, or `+∞` if none up to the cap.
    pub radius: T,
    /// Largest radius known to fail (the lower bracket).
    pub failing: T,
    pub found: bool,
}

/// Doubles from `cfg.start` until an attack succeeds, then bisects between
/// the last failing and first succeeding radius.
pub fn radius_for_set<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    rows: &[usize],
    cfg: &SensitivityConfig,
) -> Result<SensitivityRadius<T>> {
    let step = T::of(cfg.step);
    let attack = |eps: T| -> Result<bool> { Ok(pgd_attack(model, x, rows, eps, cfg.iterations, step)?.success) };
    let mut lo = T::zero();
    let mut hi = T::of(cfg.start);
    let mut found = false;
    for _ in 0..=cfg.doublings {
        if attack(hi)? {
            found = true;
            break;
        }
        lo = hi;
        hi *= T::of(2.0);
    }
    if !found {
        return Ok(SensitivityRadius {
            radius: T::infinity(),
            failing: lo,
            found: false,
        });
    }
    for _ in 0..cfg.bisections {
        let mid = (lo + hi) / T::of(2.0);
        if attack(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SensitivityRadius {
        radius: hi,
        failing: lo,
        found: true,
    })
}

/// `ε_{r_k}` for the top fraction `q` of the attribution's ranking.
pub fn sensitivity_radius<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    attribution: &Attribution<T>,
    q: f64,
    cfg: &SensitivityConfig,
) -> Result<SensitivityRadius<T>> {
    let set = RelevantSet::top(attribution, q)?;
    radius_for_set(model, x, &set.indices, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult<T> {
    /// One radius per threshold.
    pub radii: Vec<SensitivityRadius<T>>,
    /// Mean of the finite radii; `None` when every attack failed.
    pub auc: Option<T>,
    pub failures: usize,
}

/// Radii at every entry of [`THRESHOLDS`], summarised.
pub fn sensitivity_auc<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    attribution: &Attribution<T>,
    cfg: &SensitivityConfig,
) -> Result<SensitivityResult<T>> {
    sensitivity_at(model, x, attribution, &THRESHOLDS, cfg)
}

/// Radii at the given thresholds, summarised.
pub fn sensitivity_at<T: Scalar>(
    model: &ClassifierModel<T>,
    x: &Array2<T>,
    attribution: &Attribution<T>,
    thresholds: &[f64],
    cfg: &SensitivityConfig,
) -> Result<SensitivityResult<T>> {
    if thresholds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let radii = thresholds
        .iter()
        .map(|&q| sensitivity_radius(model, x, attribution, q, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(radii))
}

fn summarize<T: Scalar>(radii: Vec<SensitivityRadius<T>>) -> SensitivityResult<T> {
    let finite: Vec<T> = radii.iter().filter(|r| r.found).map(|r| r.radius).collect();
    let failures = radii.len() - finite.len();
    let auc = if finite.is_empty() {
        None
    } else {
        Some(finite.iter().copied().sum::<T>() / T::from_usize(finite.len()).unwrap())
    };
    SensitivityResult { radii, auc, failures }
}
