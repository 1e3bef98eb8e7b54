//! Faithfulness criteria for an attribution: removal-based
//! (comprehensiveness, sufficiency), sensitivity, and stability, plus the
//! curve and significance utilities the harness aggregates with.

mod interpolation;
mod removal;
mod sensitivity;
mod stability;
mod stats;

use std::fmt;
use std::str::FromStr;

pub use interpolation::{interpolation_curve, InterpolationCurve, InterpolationMetric, INTERPOLATION_SET};
pub use removal::{comprehensiveness, comprehensiveness_of, removal_auc, sufficiency, sufficiency_of, replace_rows};
pub use sensitivity::{
    pgd_attack, radius_for_set, sensitivity_at, sensitivity_auc, sensitivity_radius, AttackOutcome, SensitivityConfig,
    SensitivityRadius, SensitivityResult,
};
pub use stability::{rank_correlation, stability, StabilityConfig, StabilityResult};
pub use stats::{average_ranks, mean, spearman, std_dev, t_test, SignificanceResult};

use crate::attribution::Attribution;
use crate::error::{Error, Result};

/// Percentage thresholds used for every AUC: 10 %, 20 %, …, 50 % of `n`.
pub const THRESHOLDS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// `max(1, round(q·n))`, capped at `n`. `q·n` is rounded to nine decimals
/// first so that e.g. `0.3 · 5` counts as exactly 1.5.
pub fn relevant_size(q: f64, n: usize) -> usize {
    let raw = (q * n as f64 * 1e9).round() / 1e9;
    (raw.round() as usize).clamp(1, n.max(1))
}

/// Top-ranked token indices, most important first.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevantSet {
    pub indices: Vec<usize>,
    pub fraction: f64,
}

impl RelevantSet {
    pub fn top<T>(attribution: &Attribution<T>, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {fraction} not in (0, 1]")));
        }
        let k = relevant_size(fraction, attribution.rank.len());
        Ok(Self {
            indices: attribution.rank[..k].to_vec(),
            fraction,
        })
    }

    /// The `k` most important tokens (clamped to `n`).
    pub fn top_k<T>(attribution: &Attribution<T>, k: usize) -> Self {
        let n = attribution.rank.len();
        let k = k.clamp(1, n);
        Self {
            indices: attribution.rank[..k].to_vec(),
            fraction: k as f64 / n as f64,
        }
    }
}

/// Metric selector, with the reporting direction of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Comprehensiveness,
    Sufficiency,
    Sensitivity,
    Stability,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Comprehensiveness,
        Metric::Sufficiency,
        Metric::Sensitivity,
        Metric::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Comprehensiveness => "comp",
            Metric::Sufficiency => "suff",
            Metric::Sensitivity => "sens",
            Metric::Stability => "stab",
        }
    }

    /// True when larger values mean a more faithful attribution.
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Comprehensiveness | Metric::Stability)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "comp" | "comprehensiveness" => Ok(Metric::Comprehensiveness),
            "suff" | "sufficiency" => Ok(Metric::Sufficiency),
            "sens" | "sensitivity" => Ok(Metric::Sensitivity),
            "stab" | "stability" => Ok(Metric::Stability),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}
