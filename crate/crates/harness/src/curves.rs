//! Comprehensiveness and sensitivity as a function of an explicit number of
//! removed or perturbed tokens.

use std::path::Path;

use faithkit::metrics::{comprehensiveness_of, radius_for_set, RelevantSet};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::evaluate::{example_attribution, write_file};
use crate::tuning::resolve_pgd_radius;
use crate::workspace::Workspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: String,
    pub k: usize,
    /// `None` when no example produced a value.
    pub mean_comprehensiveness: Option<f64>,
    pub mean_sensitivity: Option<f64>,
    pub sensitivity_failures: usize,
    pub examples: usize,
    /// Examples shorter than `k`, for which every token was used.
    pub clamped: usize,
}

pub fn run_curves(cfg: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    let ws = Workspace::load(cfg)?;
    let cfg = &resolve_pgd_radius(cfg, &ws)?;
    let sample = ws.sample(cfg, cfg.per_class, cfg.min_length)?;
    curves_for_sample(&ws, cfg, &sample)
}

/// One row per (method, k) in configuration order. A failed attribution or
/// attack drops only that example from the affected mean.
pub fn curves_for_sample(ws: &Workspace, cfg: &ExperimentConfig, sample: &[usize]) -> Result<Vec<CurveRow>> {
    if cfg.curve_ks.is_empty() {
        return Err(HarnessError::Usage("curve_ks must list at least one k".into()));
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        let attrs: Vec<_> = sample
            .iter()
            .map(|&i| example_attribution(ws, cfg, i, method).ok())
            .collect();
        for &k in &cfg.curve_ks {
            let mut comp = Vec::new();
            let mut sens = Vec::new();
            let mut failures = 0;
            let mut clamped = 0;
            for prepared in &attrs {
                let Some((x, attr, _)) = prepared else {
                    failures += 1;
                    continue;
                };
                if k > x.nrows() {
                    clamped += 1;
                }
                let set = RelevantSet::top_k(attr, k);
                if let Ok(v) = comprehensiveness_of(&ws.model, x, &set.indices) {
                    comp.push(v);
                }
                match radius_for_set(&ws.model, x, &set.indices, &cfg.sensitivity) {
                    Ok(r) if r.found => sens.push(r.radius),
                    _ => failures += 1,
                }
            }
            let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            rows.push(CurveRow {
                method: method.to_string(),
                k,
                mean_comprehensiveness: avg(&comp),
                mean_sensitivity: avg(&sens),
                sensitivity_failures: failures,
                examples: sample.len(),
                clamped,
            });
        }
    }
    Ok(rows)
}

pub fn curves_to_csv(rows: &[CurveRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn curves_from_csv(text: &str) -> Result<Vec<CurveRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::Usage(format!("bad curve CSV: {e}")))
}

pub fn write_curves(rows: &[CurveRow], path: &Path) -> Result<()> {
    write_file(path, &curves_to_csv(rows)?)
}
