//! What-if analysis: named scenarios, scenario comparison, goal seeking
//! and one-at-a-time sensitivity sweeps.

use serde::{Deserialize, Serialize};

use crate::engine::infer::{self, resolve_observation, NodePosterior, Posterior, Summary};
use crate::engine::{CompiledNetwork, Evidence, Observation};
use crate::error::{Error, Result};

pub const SCENARIO_FORMAT: &str = "scen-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub observations: Evidence,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationEntry {
    node: String,
    value: Observation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    format: String,
    name: String,
    observations: Vec<ObservationEntry>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, observations: Evidence) -> Self {
        Scenario {
            name: name.into(),
            observations,
        }
    }

    pub fn from_values<'a>(name: &str, values: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Scenario::new(
            name,
            values
                .into_iter()
                .map(|(n, v)| (n.to_string(), Observation::Value(v)))
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: ScenarioDocument = serde_json::from_str(text)?;
        if doc.format != SCENARIO_FORMAT {
            return Err(Error::FormatVersion {
                expected: SCENARIO_FORMAT.into(),
                found: doc.format,
            });
        }
        if doc.name.is_empty() {
            return Err(Error::InvalidScenario("scenario name must not be empty".into()));
        }
        let mut observations = Evidence::new();
        for e in doc.observations {
            if observations.insert(e.node.clone(), e.value).is_some() {
                return Err(Error::InvalidScenario(format!("`{}` observed twice", e.node)));
            }
        }
        Ok(Scenario {
            name: doc.name,
            observations,
        })
    }

    pub fn to_text(&self) -> String {
        let doc = ScenarioDocument {
            format: SCENARIO_FORMAT.into(),
            name: self.name.clone(),
            observations: self
                .observations
                .iter()
                .map(|(node, value)| ObservationEntry {
                    node: node.clone(),
                    value: value.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes") + "\n"
    }

    /// Checks the name and that every observation resolves on `net`.
    pub fn validate(&self, net: &CompiledNetwork) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidScenario("scenario name must not be empty".into()));
        }
        infer::resolve_evidence(net, &self.observations).map(|_| ())
    }
}

/// Summary over state midpoints; for ranked nodes these are the ranked
/// midpoints in `[0, 1]`.
pub fn node_summary(net: &CompiledNetwork, node: &NodePosterior) -> Result<Summary> {
    let idx = net.index_of(&node.id)?;
    let compiled = net.node(idx);
    Ok(Summary::from_probabilities(
        &node.probabilities,
        &compiled.kind.midpoints(),
        &compiled.labels,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub target: String,
    pub observations: Evidence,
    pub posterior: Posterior,
    pub summary: Summary,
}

pub fn run_scenario(net: &CompiledNetwork, scenario: &Scenario, target: &str) -> Result<ScenarioResult> {
    net.index_of(target)?;
    scenario.validate(net)?;
    let posterior = infer::infer(net, &scenario.observations)?;
    let summary = node_summary(net, posterior.node(target)?)?;
    Ok(ScenarioResult {
        scenario: scenario.name.clone(),
        target: target.to_string(),
        observations: scenario.observations.clone(),
        posterior,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDelta {
    pub id: String,
    pub probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
}

/// Differences `b - a` between two results on the same network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub from: String,
    pub to: String,
    pub target: String,
    pub target_mean_delta: f64,
    pub target_sd_delta: f64,
    pub nodes: Vec<NodeDelta>,
}

pub fn compare(a: &ScenarioResult, b: &ScenarioResult) -> Result<ScenarioComparison> {
    let same_shape = a.posterior.nodes.len() == b.posterior.nodes.len()
        && a
            .posterior
            .nodes
            .iter()
            .zip(&b.posterior.nodes)
            .all(|(x, y)| x.id == y.id && x.probabilities.len() == y.probabilities.len());
    if a.posterior.network != b.posterior.network || !same_shape || a.target != b.target {
        return Err(Error::NetworkMismatch);
    }
    let nodes = a
        .posterior
        .nodes
        .iter()
        .zip(&b.posterior.nodes)
        .map(|(x, y)| {
            let diff = |f: fn(&Summary) -> f64| match (&x.summary, &y.summary) {
                (Some(sx), Some(sy)) => Some(f(sy) - f(sx)),
                _ => None,
            };
            NodeDelta {
                id: x.id.clone(),
                probabilities: x
                    .probabilities
                    .iter()
                    .zip(&y.probabilities)
                    .map(|(p, q)| q - p)
                    .collect(),
                mean: diff(|s| s.mean),
                sd: diff(|s| s.sd),
            }
        })
        .collect();
    Ok(ScenarioComparison {
        from: a.scenario.clone(),
        to: b.scenario.clone(),
        target: a.target.clone(),
        target_mean_delta: b.summary.mean - a.summary.mean,
        target_sd_delta: b.summary.sd - a.summary.sd,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub node: String,
    pub prior_mean: f64,
    pub mean: f64,
    pub sd: f64,
    pub mode: String,
    /// State of the node in the most probable joint explanation.
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSeekResult {
    pub target: String,
    pub desired: Observation,
    pub target_state: String,
    pub reports: Vec<ReportSummary>,
}

/// Fixes the target at the desired value and reports what the other nodes
/// would have to look like.
pub fn goal_seek(
    net: &CompiledNetwork,
    target: &str,
    desired: &Observation,
    report_nodes: &[String],
) -> Result<GoalSeekResult> {
    let t = net.index_of(target)?;
    let state = resolve_observation(net, t, desired)?;
    let evidence = Evidence::from([(target.to_string(), desired.clone())]);
    let explanation = infer::mpe(net, &evidence)?;
    let mut reports = Vec::with_capacity(report_nodes.len());
    for id in report_nodes {
        let idx = net.index_of(id)?;
        let prior = infer::infer_node(net, &Evidence::new(), id)?;
        let post = infer::infer_node(net, &evidence, id)?;
        let prior_summary = node_summary(net, &prior)?;
        let s = node_summary(net, &post)?;
        reports.push(ReportSummary {
            node: id.clone(),
            prior_mean: prior_summary.mean,
            mean: s.mean,
            sd: s.sd,
            mode: s.mode_label,
            explanation: explanation.assignment[idx].1.clone(),
        });
    }
    Ok(GoalSeekResult {
        target: target.to_string(),
        desired: desired.clone(),
        target_state: net.node(t).labels[state].clone(),
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub state: String,
    pub target_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub node: String,
    pub swing: f64,
    pub min_mean: f64,
    pub max_mean: f64,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub target: String,
    pub prior_mean: f64,
    /// Sorted by swing, largest first; equal swings by node id.
    pub entries: Vec<SensitivityEntry>,
}

/// States swept for a candidate: every state of a ranked node, or the
/// bins holding the 5%, 15%, ..., 95% prior quantiles of an interval node.
fn sweep_states(net: &CompiledNetwork, idx: usize) -> Result<Vec<usize>> {
    let node = net.node(idx);
    if !node.kind.is_interval() {
        return Ok((0..node.card()).collect());
    }
    let prior = infer::marginal(net, idx, &Default::default())?;
    let mut states = Vec::new();
    for k in 0..10 {
        let q = 0.05 + 0.1 * k as f64;
        let mut cdf = 0.0;
        let mut bin = prior.len() - 1;
        for (i, p) in prior.iter().enumerate() {
            cdf += p;
            if cdf >= q {
                bin = i;
                break;
            }
        }
        if !states.contains(&bin) {
            states.push(bin);
        }
    }
    Ok(states)
}

fn sweep_candidate(net: &CompiledNetwork, target: usize, candidate: usize) -> Result<SensitivityEntry> {
    let tnode = net.node(target);
    let mids = tnode.kind.midpoints();
    let mut sweep = Vec::new();
    for s in sweep_states(net, candidate)? {
        let evidence = [(candidate, s)].into_iter().collect();
        match infer::marginal(net, target, &evidence) {
            Ok(p) => sweep.push(SweepPoint {
                state: net.node(candidate).labels[s].clone(),
                target_mean: p.iter().zip(&mids).map(|(p, m)| p * m).sum(),
            }),
            Err(Error::ImpossibleEvidence) => continue,
            Err(e) => return Err(e),
        }
    }
    let min_mean = sweep.iter().map(|p| p.target_mean).fold(f64::INFINITY, f64::min);
    let max_mean = sweep.iter().map(|p| p.target_mean).fold(f64::NEG_INFINITY, f64::max);
    let swing = if sweep.is_empty() { 0.0 } else { (max_mean - min_mean).max(0.0) };
    Ok(SensitivityEntry {
        node: net.node(candidate).id.clone(),
        swing,
        min_mean,
        max_mean,
        sweep,
    })
}

/// One-at-a-time hard-evidence sweep of each candidate; swing is the range
/// of the target's posterior mean.
pub fn sensitivity(net: &CompiledNetwork, target: &str, candidates: &[String]) -> Result<SensitivityReport> {
    let t = net.index_of(target)?;
    let idx: Vec<usize> = candidates
        .iter()
        .map(|c| {
            let i = net.index_of(c)?;
            if i == t {
                return Err(Error::InvalidScenario("candidate equals the target".into()));
            }
            Ok(i)
        })
        .collect::<Result<_>>()?;
    let mut entries = std::thread::scope(|scope| {
        let handles: Vec<_> = idx
            .iter()
            .map(|&c| scope.spawn(move || sweep_candidate(net, t, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    entries.sort_by(|a, b| b.swing.total_cmp(&a.swing).then_with(|| a.node.cmp(&b.node)));
    let prior = infer::infer_node(net, &Evidence::new(), target)?;
    Ok(SensitivityReport {
        target: target.to_string(),
        prior_mean: node_summary(net, &prior)?.mean,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::dist::uniform_edges;
    use crate::engine::{compile, BayesianNetwork, Distribution, Expression, NodeKind, NodeSpec, PartitionEntry};

    fn spec(id: &str, kind: NodeKind, expression: Expression) -> NodeSpec {
        NodeSpec {
            id: id.into(),
            name: String::new(),
            group: None,
            kind,
            expression,
        }
    }

    /// Ranked `q` drives interval `x` on [0, 10]; `lonely` hangs on nothing.
    fn fixture() -> CompiledNetwork {
        let table = [2.0, 5.0, 8.0]
            .iter()
            .zip(["low", "medium", "high"])
            .map(|(&m, s)| PartitionEntry {
                state: s.into(),
                distribution: Distribution::tnormal(m, 2.0, 0.0, 10.0),
            })
            .collect();
        compile(&BayesianNetwork {
            nodes: vec![
                spec("q", NodeKind::ranked_default(), Expression::Uniform),
                spec(
                    "x",
                    NodeKind::Interval {
                        edges: uniform_edges(0.0, 10.0, 10),
                        unit: String::new(),
                    },
                    Expression::Partitioned {
                        parent: "q".into(),
                        table,
                    },
                ),
                spec("lonely", NodeKind::ranked_default(), Expression::Uniform),
            ],
        })
        .unwrap()
    }

    #[test]
    fn empty_scenario_is_prior() {
        let net = fixture();
        let r = run_scenario(&net, &Scenario::new("prior", Evidence::new()), "x").unwrap();
        let prior = infer::infer(&net, &Evidence::new()).unwrap();
        assert_eq!(r.posterior, prior);
        assert!((r.summary.mean - 5.0).abs() < 1e-9);
    }

    #[test]
    fn compare_identity_and_antisymmetry() {
        let net = fixture();
        let a = run_scenario(&net, &Scenario::new("a", Evidence::new()), "x").unwrap();
        let b = run_scenario(
            &net,
            &Scenario::new("b", Evidence::from([("q".into(), Observation::State("high".into()))])),
            "x",
        )
        .unwrap();
        let same = compare(&a, &a).unwrap();
        assert_eq!(same.target_mean_delta, 0.0);
        assert!(same.nodes.iter().all(|n| n.probabilities.iter().all(|&d| d == 0.0)));
        let ab = compare(&a, &b).unwrap();
        let ba = compare(&b, &a).unwrap();
        assert!(ab.target_mean_delta > 0.0);
        assert_eq!(ab.target_mean_delta, -ba.target_mean_delta);
        for (x, y) in ab.nodes.iter().zip(&ba.nodes) {
            for (p, q) in x.probabilities.iter().zip(&y.probabilities) {
                assert_eq!(*p, -q);
            }
        }
    }

    #[test]
    fn compare_rejects_other_target() {
        let net = fixture();
        let a = run_scenario(&net, &Scenario::new("a", Evidence::new()), "x").unwrap();
        let b = run_scenario(&net, &Scenario::new("b", Evidence::new()), "q").unwrap();
        assert!(matches!(compare(&a, &b), Err(Error::NetworkMismatch)));
    }

    #[test]
    fn goal_seek_moves_parent_and_rejects_out_of_range() {
        let net = fixture();
        let r = goal_seek(&net, "x", &Observation::Value(8.5), &["q".into()]).unwrap();
        assert_eq!(r.target_state, "[8,9)");
        assert!(r.reports[0].mean > r.reports[0].prior_mean);
        assert_eq!(r.reports[0].explanation, "high");
        assert!(goal_seek(&net, "x", &Observation::Value(11.0), &[]).is_err());
    }

    #[test]
    fn disconnected_candidate_has_no_swing() {
        let net = fixture();
        let report = sensitivity(&net, "x", &["lonely".into(), "q".into()]).unwrap();
        assert_eq!(report.entries[0].node, "q");
        assert!(report.entries[0].swing > 5.0);
        assert_eq!(report.entries[1].swing, 0.0);
        assert!(sensitivity(&net, "x", &["x".into()]).is_err());
    }
}
