//! Interpolation curves between the top-ranked tokens and random ones.

use std::path::Path;

use faithkit::attribution::attribute;
use faithkit::metrics::{interpolation_curve, InterpolationMetric, Metric, INTERPOLATION_SET};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::evaluate::write_file;
use crate::sampling::{example_rng, INTERPOLATION_PURPOSE};
use crate::tuning::resolve_pgd_radius;
use crate::workspace::Workspace;

const POINTS: usize = INTERPOLATION_SET + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationTable {
    /// `(dataset index, f(0..=4))`, in increasing index order.
    pub rows: Vec<(usize, [f64; POINTS])>,
    pub mean: [f64; POINTS],
    /// Examples dropped for a vanishing denominator or a failed computation.
    pub skipped: usize,
}

pub fn run_interpolate(cfg: &ExperimentConfig) -> Result<InterpolationTable> {
    let ws = Workspace::load(cfg)?;
    let cfg = &resolve_pgd_radius(cfg, &ws)?;
    let min_len = cfg.min_length.max(2 * INTERPOLATION_SET);
    let mut sample = ws.sample(cfg, cfg.interp_examples.div_ceil(2), min_len)?;
    sample.truncate(cfg.interp_examples);
    interpolate_sample(&ws, cfg, &sample)
}

pub fn interpolate_sample(ws: &Workspace, cfg: &ExperimentConfig, sample: &[usize]) -> Result<InterpolationTable> {
    let metric = match cfg.interp_metric {
        Metric::Comprehensiveness => InterpolationMetric::Comprehensiveness,
        Metric::Sensitivity => InterpolationMetric::Sensitivity(cfg.sensitivity.clone()),
        other => return Err(HarnessError::Usage(format!("interpolation does not support `{other}`"))),
    };
    let mut rows = Vec::new();
    let mut skipped = 0;
    for &index in sample {
        let mut rng = example_rng(cfg.seed, index, INTERPOLATION_PURPOSE);
        let curve = ws.model.embed(&ws.examples[index].tokens).and_then(|x| {
            let attr = attribute(cfg.interp_method, &ws.model, &x, &cfg.method, &mut rng)?;
            interpolation_curve(&ws.model, &x, &attr, &metric, &mut rng)
        });
        match curve {
            Ok(c) if !c.degenerate => rows.push((index, c.values)),
            _ => skipped += 1,
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::AllFailed(format!(
            "interpolation: all {} examples were degenerate or failed",
            sample.len()
        )));
    }
    let mut mean = [0.0; POINTS];
    for (_, v) in &rows {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= rows.len() as f64;
    }
    Ok(InterpolationTable { rows, mean, skipped })
}

fn header() -> Vec<String> {
    std::iter::once("example".to_string())
        .chain((0..POINTS).map(|i| format!("f{i}")))
        .collect()
}

impl InterpolationTable {
    /// Per-example rows followed by a `mean` row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| HarnessError::Usage(e.to_string());
        w.write_record(header()).map_err(err)?;
        let line = |label: String, v: &[f64; POINTS]| {
            std::iter::once(label).chain(v.iter().map(f64::to_string)).collect::<Vec<_>>()
        };
        for (i, v) in &self.rows {
            w.write_record(line(i.to_string(), v)).map_err(err)?;
        }
        w.write_record(line("mean".into(), &self.mean)).map_err(err)?;
        let bytes = w.into_inner().map_err(|e| HarnessError::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Inverse of [`to_csv`](Self::to_csv); the skip count is not stored and
    /// comes back as zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| HarnessError::Usage(format!("bad interpolation CSV: {msg}"));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        let mut mean = None;
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != POINTS + 1 {
                return Err(bad(format!("expected {} fields", POINTS + 1)));
            }
            let mut v = [0.0; POINTS];
            for (slot, field) in v.iter_mut().zip(rec.iter().skip(1)) {
                *slot = field.parse().map_err(|_| bad(format!("bad number `{field}`")))?;
            }
            match &rec[0] {
                "mean" => mean = Some(v),
                id => rows.push((id.parse().map_err(|_| bad(format!("bad example `{id}`")))?, v)),
            }
        }
        let mean = mean.ok_or_else(|| bad("missing mean row".into()))?;
        Ok(Self { rows, mean, skipped: 0 })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv()?)
    }
}
