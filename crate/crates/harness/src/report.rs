//! Rendering a [`FaithfulnessReport`] as CSV or an aligned text table.
//!
//! For every metric the best method is marked `*`. Every other method is
//! marked by the significance of the best method against it: `✓✓` for
//! p < 0.05, `✓` for p < 0.10 and `x` otherwise (`-` when no test could be
//! run).

use std::fmt::Write;
use std::str::FromStr;

use faithkit::metrics::Metric;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::evaluate::FaithfulnessReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

/// One CSV line of a rendered report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
    pub failures: usize,
    pub best: bool,
    pub significance: String,
}

fn direction(metric: &str) -> Result<bool> {
    Metric::from_str(metric)
        .map(Metric::higher_is_better)
        .map_err(|e| HarnessError::Usage(e.to_string()))
}

/// The best method on `metric` by its reporting direction; ties go to the
/// method listed first.
pub fn best_method<'a>(report: &'a FaithfulnessReport, metric: &str) -> Result<Option<&'a str>> {
    let higher = direction(metric)?;
    let mut best: Option<(&str, f64)> = None;
    for method in &report.methods {
        let Some(mean) = report.cell(method, metric).and_then(|c| c.mean) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((_, b)) if higher => mean > b,
            Some((_, b)) => mean < b,
        };
        if better {
            best = Some((method, mean));
        }
    }
    Ok(best.map(|(m, _)| m))
}

/// `*` for the best method, otherwise the significance of best vs `method`.
pub fn mark(report: &FaithfulnessReport, metric: &str, method: &str, best: Option<&str>) -> &'static str {
    match best {
        Some(b) if b == method => "*",
        Some(b) => match report.test(metric, b, method) {
            Some(t) if t.p < 0.05 => "✓✓",
            Some(t) if t.p < 0.10 => "✓",
            Some(_) => "x",
            None => "-",
        },
        None => "-",
    }
}

pub fn rows(report: &FaithfulnessReport) -> Result<Vec<ReportRow>> {
    if report.cells.is_empty() {
        return Err(HarnessError::Usage("report holds no results".into()));
    }
    let mut out = Vec::new();
    for metric in &report.metrics {
        let best = best_method(report, metric)?;
        for method in &report.methods {
            let Some(cell) = report.cell(method, metric) else {
                continue;
            };
            out.push(ReportRow {
                method: method.clone(),
                metric: metric.clone(),
                mean: cell.mean,
                std: cell.std,
                count: cell.count,
                failures: cell.failures,
                best: best == Some(method.as_str()),
                significance: mark(report, metric, method, best).to_string(),
            });
        }
    }
    Ok(out)
}

pub fn render(report: &FaithfulnessReport, format: Format) -> Result<String> {
    let rows = rows(report)?;
    match format {
        Format::Csv => render_csv(&rows),
        Format::Text => Ok(render_text(report, &rows)),
    }
}

fn render_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::Usage(format!("bad report CSV: {e}")))
}

fn render_text(report: &FaithfulnessReport, rows: &[ReportRow]) -> String {
    let mut table: Vec<Vec<String>> = Vec::new();
    let mut head = vec!["method".to_string()];
    for metric in &report.metrics {
        let arrow = if direction(metric).unwrap_or(true) { "↑" } else { "↓" };
        head.push(format!("{metric} {arrow}"));
    }
    table.push(head);
    for method in &report.methods {
        let mut line = vec![method.clone()];
        for metric in &report.metrics {
            let cell = rows.iter().find(|r| &r.method == method && &r.metric == metric);
            line.push(match cell {
                Some(ReportRow {
                    mean: Some(m),
                    std: Some(s),
                    significance,
                    ..
                }) => format!("{m:.4} ± {s:.4} {significance}"),
                _ => "n/a".to_string(),
            });
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in table.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    let failed: Vec<&ReportRow> = rows.iter().filter(|r| r.failures > 0).collect();
    if !failed.is_empty() {
        let _ = writeln!(out, "\nfailures:");
        for r in failed {
            let _ = writeln!(out, "  {} / {}: {} of {}", r.method, r.metric, r.failures, r.failures + r.count);
        }
    }
    let _ = writeln!(
        out,
        "\n* best per metric; ✓✓ p < 0.05, ✓ p < 0.10, x not significant (best vs row, Student's t)"
    );
    out
}
