//! Renderings of engine results: pretty JSON for machines, aligned text
//! with histogram bars for people.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::engine::{CompiledNetwork, Explanation, NodePosterior, Observation, Posterior};
use crate::model::ValidationReport;
use crate::scenarios::{GoalSeekResult, ScenarioComparison, ScenarioResult, SensitivityReport};

const BAR_WIDTH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Machine,
}

/// Pretty JSON with a trailing newline.
pub fn machine<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

/// Four significant digits, without exponent for the usual magnitudes.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 3 - x.abs().log10().floor() as i32;
    format!("{:.*}", digits.clamp(0, 10) as usize, x)
}

fn bar(p: f64) -> String {
    "#".repeat((p * BAR_WIDTH as f64).round() as usize)
}

/// One row per state: label, probability and a bar.
pub fn histogram(node: &NodePosterior) -> String {
    let width = node.labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (label, p) in node.labels.iter().zip(&node.probabilities) {
        writeln!(out, "  {label:<width$}  {p:.4}  {}", bar(*p)).unwrap();
    }
    out
}

pub fn node_text(net: &CompiledNetwork, node: &NodePosterior) -> String {
    let mut out = String::new();
    let name = net
        .index_of(&node.id)
        .map(|i| net.node(i).name.clone())
        .unwrap_or_default();
    write!(out, "{}", node.id).unwrap();
    if !name.is_empty() && name != node.id {
        write!(out, " ({name})").unwrap();
    }
    if let Some(s) = &node.summary {
        write!(out, ": mean {}, sd {}, mode {}", num(s.mean), num(s.sd), s.mode_label).unwrap();
    }
    out.push('\n');
    out + &histogram(node)
}

pub fn posterior_text(net: &CompiledNetwork, posterior: &Posterior) -> String {
    posterior
        .nodes
        .iter()
        .map(|n| node_text(net, n))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn scenario_text(net: &CompiledNetwork, result: &ScenarioResult) -> String {
    let s = &result.summary;
    let mut out = format!(
        "scenario {}: {} mean {}, sd {}, mode {}\n\n",
        result.scenario,
        result.target,
        num(s.mean),
        num(s.sd),
        s.mode_label
    );
    out += &posterior_text(net, &result.posterior);
    out
}

pub fn comparison_text(c: &ScenarioComparison) -> String {
    let mut out = format!(
        "{} -> {}: {} mean {:+.4}, sd {:+.4}\n",
        c.from, c.to, c.target, c.target_mean_delta, c.target_sd_delta
    );
    for n in &c.nodes {
        let mean = n.mean.map(|m| format!(" mean {m:+.4}")).unwrap_or_default();
        let deltas: Vec<String> = n.probabilities.iter().map(|d| format!("{d:+.4}")).collect();
        writeln!(out, "  {}:{mean} [{}]", n.id, deltas.join(", ")).unwrap();
    }
    out
}

pub fn goal_seek_text(r: &GoalSeekResult) -> String {
    let mut out = format!("{} = {} (bin {})\n", r.target, r.desired, r.target_state);
    let width = r.reports.iter().map(|x| x.node.len()).max().unwrap_or(4).max(4);
    writeln!(
        out,
        "  {:<width$}  {:>10}  {:>10}  {:>10}  {:<14}  explanation",
        "node", "prior", "mean", "sd", "mode"
    )
    .unwrap();
    for x in &r.reports {
        writeln!(
            out,
            "  {:<width$}  {:>10}  {:>10}  {:>10}  {:<14}  {}",
            x.node,
            num(x.prior_mean),
            num(x.mean),
            num(x.sd),
            x.mode,
            x.explanation
        )
        .unwrap();
    }
    out
}

pub fn sensitivity_text(r: &SensitivityReport) -> String {
    let mut out = format!("{} prior mean {}\n", r.target, num(r.prior_mean));
    let width = r.entries.iter().map(|e| e.node.len()).max().unwrap_or(4).max(4);
    writeln!(out, "  rank  {:<width$}  {:>10}  {:>10}  {:>10}", "node", "swing", "min", "max").unwrap();
    for (i, e) in r.entries.iter().enumerate() {
        writeln!(
            out,
            "  {:>4}  {:<width$}  {:>10}  {:>10}  {:>10}",
            i + 1,
            e.node,
            num(e.swing),
            num(e.min_mean),
            num(e.max_mean)
        )
        .unwrap();
    }
    out
}

pub fn explanation_text(e: &Explanation) -> String {
    let mut out = format!("most probable explanation (p = {:.6e})\n", e.probability);
    for (node, state) in &e.assignment {
        writeln!(out, "  {node} = {state}").unwrap();
    }
    out
}

pub fn validation_text(report: &ValidationReport) -> String {
    report.to_string()
}

/// Scenarios side by side: observed indicators on top, target summary below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchTable {
    pub columns: Vec<String>,
    pub rows: Vec<BatchRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub label: String,
    pub values: Vec<Option<f64>>,
}

impl BatchTable {
    /// `observed` holds an optional measured target value per result.
    pub fn new(net: &CompiledNetwork, results: &[ScenarioResult], observed: &[Option<f64>]) -> Self {
        let mut indicators: Vec<String> = Vec::new();
        for r in results {
            for n in &r.posterior.nodes {
                if n.id != r.target && !indicators.contains(&n.id) && is_observed(r, &n.id) {
                    indicators.push(n.id.clone());
                }
            }
        }
        let label = |id: &str| {
            net.index_of(id)
                .map(|i| net.node(i).name.clone())
                .ok()
                .filter(|n| !n.is_empty())
                .unwrap_or_else(|| id.to_string())
        };
        let mut rows: Vec<BatchRow> = indicators
            .iter()
            .map(|id| BatchRow {
                label: label(id),
                values: results.iter().map(|r| observed_value(r, id)).collect(),
            })
            .collect();
        let target = results.first().map(|r| label(&r.target)).unwrap_or_default();
        rows.push(BatchRow {
            label: format!("Predicted {target}"),
            values: results.iter().map(|r| Some(r.summary.mean)).collect(),
        });
        rows.push(BatchRow {
            label: "Standard deviation".into(),
            values: results.iter().map(|r| Some(r.summary.sd)).collect(),
        });
        if observed.iter().any(Option::is_some) {
            rows.push(BatchRow {
                label: format!("Observed {target}"),
                values: (0..results.len()).map(|i| observed.get(i).copied().flatten()).collect(),
            });
        }
        BatchTable {
            columns: results.iter().map(|r| r.scenario.clone()).collect(),
            rows,
        }
    }

    pub fn to_text(&self) -> String {
        let lw = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
        let split = self.rows.iter().position(|r| r.label.starts_with("Predicted "));
        // observations print as entered, derived rows at two decimals
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.values
                    .iter()
                    .map(|v| match v {
                        None => "-".into(),
                        Some(x) if split.is_some_and(|s| i >= s) => format!("{x:.2}"),
                        Some(x) => format!("{x}"),
                    })
                    .collect()
            })
            .collect();
        let cw = cells
            .iter()
            .flatten()
            .map(String::len)
            .chain(self.columns.iter().map(String::len))
            .max()
            .unwrap_or(1);
        let mut out = format!("{:<lw$}", "");
        for c in &self.columns {
            write!(out, "  {c:>cw$}").unwrap();
        }
        out.push('\n');
        for (i, (row, cells)) in self.rows.iter().zip(&cells).enumerate() {
            if Some(i) == split {
                out += &"-".repeat(lw + self.columns.len() * (cw + 2));
                out.push('\n');
            }
            write!(out, "{:<lw$}", row.label).unwrap();
            for c in cells {
                write!(out, "  {c:>cw$}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn is_observed(r: &ScenarioResult, id: &str) -> bool {
    observed_value(r, id).is_some()
}

fn observed_value(r: &ScenarioResult, id: &str) -> Option<f64> {
    r.observations.get(id).and_then(|o| match o {
        Observation::Value(v) => Some(*v),
        Observation::State(_) => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_rows_sum_to_one() {
        let node = NodePosterior {
            id: "x".into(),
            labels: vec!["a".into(), "b".into()],
            probabilities: vec![0.6, 0.4],
            summary: None,
        };
        let text = histogram(&node);
        let total: f64 = text
            .lines()
            .map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(text.lines().next().unwrap().ends_with(&"#".repeat(24)));
    }

    #[test]
    fn significant_digits() {
        assert_eq!(num(27.04), "27.04");
        assert_eq!(num(0.0054321), "0.005432");
        assert_eq!(num(203.49), "203.5");
        assert_eq!(num(0.0), "0");
    }
}
