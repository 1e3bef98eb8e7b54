//! Choosing the PGD attribution radius on the development split.

use faithkit::attribution::{attribute_pgdinp, Method};
use faithkit::corpus::load_texts;
use faithkit::metrics::sensitivity_at;
use faithkit::Model;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::sampling::balanced_sample;
use crate::workspace::{lift, Workspace};

/// Candidate radii, tried in this order.
pub const PGD_RADIUS_GRID: [f64; 4] = [0.1, 0.5, 1.2, 2.2];

/// Used when no development split is configured.
pub const FALLBACK_PGD_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusChoice {
    pub radius: f64,
    /// `(radius, mean sensitivity AUC)` per grid entry; `None` when every
    /// example failed at that radius.
    pub scores: Vec<(f64, Option<f64>)>,
}

/// Mean PgdInp sensitivity AUC over a balanced development sample for each
/// grid radius. The lowest mean wins, ties going to the earlier radius.
pub fn select_pgd_radius(ws: &Workspace, cfg: &ExperimentConfig) -> Result<RadiusChoice> {
    let Some(dev) = &cfg.dev_data else {
        return Ok(RadiusChoice {
            radius: FALLBACK_PGD_RADIUS,
            scores: Vec::new(),
        });
    };
    let texts = load_texts(dev).map_err(lift("development data"))?;
    let examples = ws.vocab.encode_all(&texts);
    let sample = balanced_sample(&examples, cfg.pgd_select_per_class, cfg.min_length, cfg.max_length, cfg.seed);
    if sample.is_empty() {
        return Err(HarnessError::core(
            "radius selection",
            faithkit::Error::DegenerateData("no development example passes the length filter".into()),
        ));
    }
    let inputs = sample
        .iter()
        .map(|&i| ws.model.embed(&examples[i].tokens))
        .collect::<faithkit::Result<Vec<_>>>()
        .map_err(lift("radius selection"))?;
    let mut scores = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for radius in PGD_RADIUS_GRID {
        let mean = mean_sensitivity(&ws.model, &inputs, cfg, radius);
        if let Some(m) = mean {
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((radius, m));
            }
        }
        scores.push((radius, mean));
    }
    Ok(RadiusChoice {
        radius: best.map_or(FALLBACK_PGD_RADIUS, |(r, _)| r),
        scores,
    })
}

fn mean_sensitivity(model: &Model, inputs: &[faithkit::Embeddings], cfg: &ExperimentConfig, radius: f64) -> Option<f64> {
    let mut pgd = cfg.method.pgd.clone();
    pgd.radius = radius;
    pgd.step = radius / 5.0;
    let values: Vec<f64> = inputs
        .iter()
        .filter_map(|x| {
            let attr = attribute_pgdinp(model, x, &pgd).ok()?;
            sensitivity_at(model, x, &attr, &cfg.thresholds, &cfg.sensitivity)
                .ok()?
                .auc
                .filter(|v| v.is_finite())
        })
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// The config with a concrete PGD radius. Selection runs only for
/// `pgd_radius = auto` and when a PGD-based method is in use.
pub fn resolve_pgd_radius(cfg: &ExperimentConfig, ws: &Workspace) -> Result<ExperimentConfig> {
    let mut out = cfg.clone();
    let uses_pgd = cfg
        .methods
        .iter()
        .chain([&cfg.interp_method])
        .any(|m| matches!(m, Method::PgdInp | Method::VaPgd));
    if cfg.pgd_auto && uses_pgd {
        let choice = select_pgd_radius(ws, cfg)?;
        out.method.pgd.radius = choice.radius;
        out.method.pgd.step = choice.radius / 5.0;
        out.pgd_auto = false;
    }
    Ok(out)
}
