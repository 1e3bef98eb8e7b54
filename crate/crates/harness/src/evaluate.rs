//! Attribution evaluation over a class-balanced sample: one attribution per
//! (example, method), every configured metric on it, then aggregation and
//! pairwise significance tests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use faithkit::attribution::{attribute, Attribution, Method};
use faithkit::corpus::Example;
use faithkit::metrics::{
    comprehensiveness, mean, removal_auc, sensitivity_at, stability, std_dev, sufficiency, t_test, Metric,
};
use faithkit::Embeddings;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::sampling::example_rng;
use crate::tuning::resolve_pgd_radius;
use crate::workspace::Workspace;
use crate::TOOLKIT_VERSION;

/// One per-example measurement, as dumped to the JSON-lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example: usize,
    pub method: String,
    pub metric: String,
    pub value: Option<f64>,
    pub failed: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: String,
    pub metric: String,
    /// `None` when every example failed.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
    pub failures: usize,
}

/// Student's t test of `first` against `second` on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub metric: String,
    pub first: String,
    pub second: String,
    /// `None` when the statistic is infinite (both groups constant).
    pub t: Option<f64>,
    pub p: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub version: String,
    pub seed: u64,
    pub examples: Vec<usize>,
    pub methods: Vec<String>,
    pub metrics: Vec<String>,
    pub config: BTreeMap<String, String>,
    pub cells: Vec<Cell>,
    pub significance: Vec<PairwiseTest>,
}

impl FaithfulnessReport {
    pub fn cell(&self, method: &str, metric: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.metric == metric)
    }

    pub fn test(&self, metric: &str, a: &str, b: &str) -> Option<&PairwiseTest> {
        self.significance
            .iter()
            .find(|t| t.metric == metric && ((t.first == a && t.second == b) || (t.first == b && t.second == a)))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Usage(format!("{}: not a report: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: FaithfulnessReport,
    pub records: Vec<ExampleRecord>,
}

impl Evaluation {
    pub fn all_failed(&self) -> bool {
        self.records.iter().all(|r| r.failed)
    }

    pub fn records_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Writes the report and its `.jsonl` sibling; returns the sibling path.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        write_file(path, &self.report.to_json())?;
        let dump = records_path(path);
        write_file(&dump, &self.records_jsonl())?;
        Ok(dump)
    }
}

/// `report.json` → `report.jsonl`.
pub fn records_path(report: &Path) -> PathBuf {
    report.with_extension("jsonl")
}

pub fn read_records(path: &Path) -> Result<Vec<ExampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| HarnessError::Usage(format!("{}: bad record: {e}", path.display())))
        })
        .collect()
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

fn method_code(method: Method) -> u64 {
    Method::ALL.iter().position(|&m| m == method).unwrap() as u64
}

/// The attribution and generator used for one (example, method) pair.
pub fn example_attribution(
    ws: &Workspace,
    cfg: &ExperimentConfig,
    index: usize,
    method: Method,
) -> faithkit::Result<(Embeddings, Attribution<f64>, ChaCha8Rng)> {
    let mut rng = example_rng(cfg.seed, index, method_code(method));
    let x = ws.model.embed(&ws.examples[index].tokens)?;
    let attr = attribute(method, &ws.model, &x, &cfg.method, &mut rng)?;
    Ok((x, attr, rng))
}

fn finite(v: f64, what: &'static str) -> faithkit::Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(faithkit::Error::NonFinite(what))
    }
}

fn measure(
    ws: &Workspace,
    cfg: &ExperimentConfig,
    example: &Example,
    x: &Embeddings,
    attr: &Attribution<f64>,
    method: Method,
    metric: Metric,
    rng: &mut ChaCha8Rng,
) -> faithkit::Result<f64> {
    let model = &ws.model;
    match metric {
        Metric::Comprehensiveness => {
            let v = cfg
                .thresholds
                .iter()
                .map(|&q| comprehensiveness(model, x, attr, q))
                .collect::<faithkit::Result<Vec<_>>>()?;
            finite(removal_auc(&v)?, "comprehensiveness")
        }
        Metric::Sufficiency => {
            let v = cfg
                .thresholds
                .iter()
                .map(|&q| sufficiency(model, x, attr, q))
                .collect::<faithkit::Result<Vec<_>>>()?;
            finite(removal_auc(&v)?, "sufficiency")
        }
        Metric::Sensitivity => {
            let res = sensitivity_at(model, x, attr, &cfg.thresholds, &cfg.sensitivity)?;
            let auc = res
                .auc
                .ok_or_else(|| faithkit::Error::Numeric("no attack succeeded at any threshold".into()))?;
            finite(auc, "sensitivity")
        }
        Metric::Stability => {
            let res = stability(model, &example.tokens, &ws.vocab, &ws.lexicon, &cfg.stability, |e| {
                attribute(method, model, e, &cfg.method, rng)
            })?;
            finite(res.spearman, "stability")
        }
    }
}

/// Runs the evaluation in memory.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<Evaluation> {
    let ws = Workspace::load(cfg)?;
    if cfg.metrics.contains(&Metric::Stability) && ws.lexicon.is_empty() {
        return Err(HarnessError::Usage(
            "the stab metric needs a non-empty `synonyms` lexicon".into(),
        ));
    }
    let cfg = &resolve_pgd_radius(cfg, &ws)?;
    let sample = ws.sample(cfg, cfg.per_class, cfg.min_length)?;
    evaluate_sample(&ws, cfg, &sample)
}

/// Evaluates the given dataset indices. Records come out ordered by example,
/// then method, then metric, in configuration order.
pub fn evaluate_sample(ws: &Workspace, cfg: &ExperimentConfig, sample: &[usize]) -> Result<Evaluation> {
    let mut records = Vec::new();
    for &index in sample {
        let example = &ws.examples[index];
        for &method in &cfg.methods {
            let prepared = example_attribution(ws, cfg, index, method);
            for &metric in &cfg.metrics {
                let outcome = match &prepared {
                    Ok((x, attr, rng)) => {
                        let mut rng = rng.clone();
                        measure(ws, cfg, example, x, attr, method, metric, &mut rng)
                    }
                    Err(e) => Err(faithkit::Error::Numeric(format!("attribution failed: {e}"))),
                };
                let (value, error) = match outcome {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                records.push(ExampleRecord {
                    example: index,
                    method: method.to_string(),
                    metric: metric.to_string(),
                    failed: value.is_none(),
                    value,
                    seed: cfg.seed,
                    error,
                });
            }
        }
    }
    let report = aggregate(cfg, sample, &records)?;
    Ok(Evaluation { report, records })
}

fn values_of<'a>(records: &'a [ExampleRecord], method: &'a str, metric: &'a str) -> impl Iterator<Item = &'a ExampleRecord> {
    records.iter().filter(move |r| r.method == method && r.metric == metric)
}

/// Builds the aggregate report from per-example records.
pub fn aggregate(cfg: &ExperimentConfig, sample: &[usize], records: &[ExampleRecord]) -> Result<FaithfulnessReport> {
    let methods: Vec<String> = cfg.methods.iter().map(Method::to_string).collect();
    let metrics: Vec<String> = cfg.metrics.iter().map(Metric::to_string).collect();
    let mut cells = Vec::new();
    let mut samples: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for method in &methods {
        for metric in &metrics {
            let mut ok = Vec::new();
            let mut failures = 0;
            for r in values_of(records, method, metric) {
                match r.value {
                    Some(v) if !r.failed => ok.push(v),
                    _ => failures += 1,
                }
            }
            cells.push(Cell {
                method: method.clone(),
                metric: metric.clone(),
                mean: (!ok.is_empty()).then(|| mean(&ok)),
                std: (!ok.is_empty()).then(|| std_dev(&ok)),
                count: ok.len(),
                failures,
            });
            samples.insert((method, metric), ok);
        }
    }
    let mut significance = Vec::new();
    for metric in &metrics {
        for (i, a) in methods.iter().enumerate() {
            for b in &methods[i + 1..] {
                let (va, vb) = (&samples[&(a.as_str(), metric.as_str())], &samples[&(b.as_str(), metric.as_str())]);
                if va.len() < 2 || vb.len() < 2 {
                    continue;
                }
                let r = t_test(va, vb).map_err(|e| HarnessError::core("significance", e))?;
                significance.push(PairwiseTest {
                    metric: metric.clone(),
                    first: a.clone(),
                    second: b.clone(),
                    t: r.t.is_finite().then_some(r.t),
                    p: r.p,
                    df: r.df,
                });
            }
        }
    }
    Ok(FaithfulnessReport {
        version: TOOLKIT_VERSION.to_string(),
        seed: cfg.seed,
        examples: sample.to_vec(),
        methods,
        metrics,
        config: cfg.echo(),
        cells,
        significance,
    })
}
