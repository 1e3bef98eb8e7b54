//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the config file. Unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use faithkit::attribution::{Method, MethodConfig};
use faithkit::metrics::{Metric, SensitivityConfig, StabilityConfig, THRESHOLDS};
use faithkit::train::TrainConfig;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train_data: Option<PathBuf>,
    pub dev_data: Option<PathBuf>,
    pub eval_data: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub output: Option<PathBuf>,

    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub thresholds: Vec<f64>,
    pub seed: u64,

    /// Evaluation examples drawn per class.
    pub per_class: usize,
    pub min_length: usize,
    pub max_length: usize,

    pub train: TrainConfig,
    pub method: MethodConfig<f64>,
    /// Choose the PGD radius on the development split (`pgd_radius = auto`).
    pub pgd_auto: bool,
    /// Development examples per class used for that choice.
    pub pgd_select_per_class: usize,
    pub sensitivity: SensitivityConfig,
    pub stability: StabilityConfig,

    pub curve_ks: Vec<usize>,
    pub interp_method: Method,
    pub interp_metric: Metric,
    pub interp_examples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_data: None,
            dev_data: None,
            eval_data: None,
            embeddings: None,
            synonyms: None,
            checkpoint: None,
            output: None,
            methods: Method::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            thresholds: THRESHOLDS.to_vec(),
            seed: 0,
            per_class: 100,
            min_length: 1,
            max_length: usize::MAX,
            train: TrainConfig::default(),
            method: MethodConfig::default(),
            pgd_auto: false,
            pgd_select_per_class: 10,
            sensitivity: SensitivityConfig::default(),
            stability: StabilityConfig::default(),
            curve_ks: (1..=10).collect(),
            interp_method: Method::PgdInp,
            interp_metric: Metric::Comprehensiveness,
            interp_examples: 50,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| HarnessError::Config {
        line,
        msg: format!("invalid value `{value}` for `{key}`"),
    })
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(line, key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| HarnessError::Config {
                line,
                msg: "expected `key = value`".into(),
            })?;
            cfg.set(line, key.trim(), value.trim(), base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(value));
        match key {
            "train_data" => self.train_data = path(),
            "dev_data" => self.dev_data = path(),
            "eval_data" => self.eval_data = path(),
            "embeddings" => self.embeddings = path(),
            "synonyms" => self.synonyms = path(),
            "checkpoint" => self.checkpoint = path(),
            "output" => self.output = path(),
            "methods" => self.methods = parse_list(line, key, value)?,
            "metrics" => self.metrics = parse_list(line, key, value)?,
            "thresholds" => self.thresholds = parse_list(line, key, value)?,
            "seed" => {
                self.seed = parse_value(line, key, value)?;
                self.train.seed = self.seed;
            }
            "per_class" => self.per_class = parse_value(line, key, value)?,
            "min_length" => self.min_length = parse_value(line, key, value)?,
            "max_length" => self.max_length = parse_value(line, key, value)?,
            "learning_rate" => self.train.learning_rate = parse_value(line, key, value)?,
            "batch_size" => self.train.batch_size = parse_value(line, key, value)?,
            "max_epochs" => self.train.max_epochs = parse_value(line, key, value)?,
            "patience" => self.train.patience = parse_value(line, key, value)?,
            "hidden" => self.train.hidden = parse_value(line, key, value)?,
            "ig_steps" => self.method.ig_steps = parse_value(line, key, value)?,
            "lime_samples" => self.method.lime.samples = parse_value(line, key, value)?,
            "lime_kernel_width" => self.method.lime.kernel_width = parse_value(line, key, value)?,
            "lime_ridge" => self.method.lime.ridge = parse_value(line, key, value)?,
            "pgd_radius" if value == "auto" => self.pgd_auto = true,
            "pgd_radius" => {
                let radius: f64 = parse_value(line, key, value)?;
                self.method.pgd.radius = radius;
                self.method.pgd.step = radius / 5.0;
                self.pgd_auto = false;
            }
            "pgd_select_per_class" => self.pgd_select_per_class = parse_value(line, key, value)?,
            "pgd_iterations" => self.method.pgd.iterations = parse_value(line, key, value)?,
            "pgd_step" => self.method.pgd.step = parse_value(line, key, value)?,
            "certify_radius" => self.method.certify.radius = parse_value(line, key, value)?,
            "sensitivity_iterations" => self.sensitivity.iterations = parse_value(line, key, value)?,
            "sensitivity_step" => self.sensitivity.step = parse_value(line, key, value)?,
            "sensitivity_start" => self.sensitivity.start = parse_value(line, key, value)?,
            "sensitivity_doublings" => self.sensitivity.doublings = parse_value(line, key, value)?,
            "sensitivity_bisections" => self.sensitivity.bisections = parse_value(line, key, value)?,
            "stability_substitutions" => self.stability.max_substitutions = parse_value(line, key, value)?,
            "stability_tau" => self.stability.tau = parse_value(line, key, value)?,
            "curve_ks" => self.curve_ks = parse_list(line, key, value)?,
            "interp_method" => self.interp_method = parse_value(line, key, value)?,
            "interp_metric" => self.interp_metric = parse_value(line, key, value)?,
            "interp_examples" => self.interp_examples = parse_value(line, key, value)?,
            _ => {
                return Err(HarnessError::Config {
                    line,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Usage(msg.to_string()));
        if self.methods.is_empty() || self.metrics.is_empty() {
            return bad("methods and metrics must be non-empty");
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return bad("thresholds must be a non-empty list within (0, 1]");
        }
        if self.pgd_auto && self.pgd_select_per_class == 0 {
            return bad("pgd_select_per_class must be positive");
        }
        if self.curve_ks.contains(&0) {
            return bad("curve_ks must be positive");
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return bad("need 1 ≤ min_length ≤ max_length");
        }
        if !matches!(self.interp_metric, Metric::Comprehensiveness | Metric::Sensitivity) {
            return bad("interp_metric must be comp or sens");
        }
        self.method
            .pgd
            .validate()
            .and_then(|_| self.stability.validate())
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        if !(self.method.certify.radius >= 0.0) {
            return bad("certify_radius must be ≥ 0");
        }
        Ok(())
    }

    /// Overrides the global seed (training included).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| HarnessError::Usage(format!("config key `{key}` is required for this command")))
    }

    /// Every effective setting as text, for echoing into reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        for (k, p) in [
            ("train_data", &self.train_data),
            ("dev_data", &self.dev_data),
            ("eval_data", &self.eval_data),
            ("embeddings", &self.embeddings),
            ("synonyms", &self.synonyms),
            ("checkpoint", &self.checkpoint),
            ("output", &self.output),
        ] {
            if let Some(p) = p {
                put(k, p.display().to_string());
            }
        }
        put("methods", join(&self.methods));
        put("metrics", join(&self.metrics));
        put("thresholds", join(&self.thresholds));
        put("seed", self.seed.to_string());
        put("per_class", self.per_class.to_string());
        put("min_length", self.min_length.to_string());
        if self.max_length != usize::MAX {
            put("max_length", self.max_length.to_string());
        }
        put("learning_rate", self.train.learning_rate.to_string());
        put("batch_size", self.train.batch_size.to_string());
        put("max_epochs", self.train.max_epochs.to_string());
        put("patience", self.train.patience.to_string());
        put("hidden", self.train.hidden.to_string());
        put("ig_steps", self.method.ig_steps.to_string());
        put("lime_samples", self.method.lime.samples.to_string());
        put("lime_kernel_width", self.method.lime.kernel_width.to_string());
        put("lime_ridge", self.method.lime.ridge.to_string());
        if self.pgd_auto {
            put("pgd_radius", "auto".into());
            put("pgd_select_per_class", self.pgd_select_per_class.to_string());
        } else {
            put("pgd_radius", self.method.pgd.radius.to_string());
        }
        put("pgd_iterations", self.method.pgd.iterations.to_string());
        put("pgd_step", self.method.pgd.step.to_string());
        put("certify_radius", self.method.certify.radius.to_string());
        put("sensitivity_iterations", self.sensitivity.iterations.to_string());
        put("sensitivity_step", self.sensitivity.step.to_string());
        put("sensitivity_start", self.sensitivity.start.to_string());
        put("sensitivity_doublings", self.sensitivity.doublings.to_string());
        put("sensitivity_bisections", self.sensitivity.bisections.to_string());
        put("stability_substitutions", self.stability.max_substitutions.to_string());
        put("stability_tau", self.stability.tau.to_string());
        put("curve_ks", join(&self.curve_ks));
        put("interp_method", self.interp_method.to_string());
        put("interp_metric", self.interp_metric.to_string());
        put("interp_examples", self.interp_examples.to_string());
        m
    }
}
