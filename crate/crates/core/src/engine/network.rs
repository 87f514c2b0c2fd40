//! Declarative network description: nodes, their state spaces and the
//! expressions that generate their probability tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dist::{self, Distribution};
use crate::error::{Error, Result};

/// Direction of an impact of a parent on a ranked child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        }
    }
}

/// Which part of the quality model a node was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeGroup {
    Activity,
    Fact,
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NodeKind {
    /// Ordered states with numeric midpoints in `[0, 1]`.
    Ranked {
        states: Vec<String>,
        midpoints: Vec<f64>,
    },
    /// Numeric quantity discretized on explicit bin edges.
    Interval { edges: Vec<f64>, unit: String },
}

/// Shortest decimal after rounding to 12 significant digits, so that
/// accumulated edges like `0.009000000000000001` print as `0.009`.
fn edge_label(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

impl NodeKind {
    pub fn ranked_default() -> Self {
        NodeKind::Ranked {
            states: vec!["low".into(), "medium".into(), "high".into()],
            midpoints: vec![1.0 / 6.0, 0.5, 5.0 / 6.0],
        }
    }

    pub fn card(&self) -> usize {
        match self {
            NodeKind::Ranked { states, .. } => states.len(),
            NodeKind::Interval { edges, .. } => edges.len().saturating_sub(1),
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, NodeKind::Interval { .. })
    }

    /// Bin edges on the node's value axis. Ranked nodes split `[0, 1]`
    /// into equal-width bins, one per state.
    pub fn edges(&self) -> Vec<f64> {
        match self {
            NodeKind::Ranked { states, .. } => dist::uniform_edges(0.0, 1.0, states.len()),
            NodeKind::Interval { edges, .. } => edges.clone(),
        }
    }

    /// Representative value of each state.
    pub fn midpoints(&self) -> Vec<f64> {
        match self {
            NodeKind::Ranked { midpoints, .. } => midpoints.clone(),
            NodeKind::Interval { edges, .. } => dist::bin_midpoints(edges),
        }
    }

    /// Midpoints rescaled onto `[0, 1]`, used when a node feeds a weighted mean.
    pub fn unit_midpoints(&self) -> Vec<f64> {
        match self {
            NodeKind::Ranked { midpoints, .. } => midpoints.clone(),
            NodeKind::Interval { edges, .. } => {
                let (lo, hi) = (edges[0], edges[edges.len() - 1]);
                dist::bin_midpoints(edges)
                    .into_iter()
                    .map(|m| (m - lo) / (hi - lo))
                    .collect()
            }
        }
    }

    pub fn state_labels(&self) -> Vec<String> {
        match self {
            NodeKind::Ranked { states, .. } => states.clone(),
            NodeKind::Interval { edges, .. } => edges
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    let close = if i + 2 == edges.len() { ']' } else { ')' };
                    format!("[{},{}{close}", edge_label(w[0]), edge_label(w[1]))
                })
                .collect(),
        }
    }

    pub fn validate(&self, node: &str) -> Result<()> {
        let err = |message: String| Error::InvalidNode {
            node: node.to_string(),
            message,
        };
        match self {
            NodeKind::Ranked { states, midpoints } => {
                if states.is_empty() {
                    return Err(err("ranked node needs at least one state".into()));
                }
                if states.len() != midpoints.len() {
                    return Err(err("one midpoint per state required".into()));
                }
                if midpoints.iter().any(|m| !(0.0..=1.0).contains(m))
                    || midpoints.windows(2).any(|w| !(w[0] < w[1]))
                {
                    return Err(err("midpoints must be strictly increasing in [0,1]".into()));
                }
                let mut seen = std::collections::HashSet::new();
                if !states.iter().all(|s| seen.insert(s)) {
                    return Err(err("duplicate state name".into()));
                }
                Ok(())
            }
            NodeKind::Interval { edges, .. } => {
                dist::check_edges(edges).map_err(|e| err(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedParent {
    pub node: String,
    pub weight: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionEntry {
    pub state: String,
    pub distribution: Distribution,
}

/// How a node's probability table is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expression {
    /// Equal probability for every state; the node has no parents.
    Uniform,
    /// TNormal centred on the weighted average of the parents' unit
    /// midpoints; negatively signed parents contribute `1 - midpoint`.
    WeightedMean {
        parents: Vec<WeightedParent>,
        variance: f64,
    },
    /// One distribution per state of a single parent.
    Partitioned {
        parent: String,
        table: Vec<PartitionEntry>,
    },
    /// TNormal noise around `intercept + slope * midpoint(parent)`,
    /// truncated to the child's range.
    Arithmetic {
        parent: String,
        intercept: f64,
        slope: f64,
        variance: f64,
    },
    /// Literal table: one probability column per parent configuration,
    /// parents enumerated row-major (the last parent varies fastest).
    ExplicitCpt {
        parents: Vec<String>,
        columns: Vec<Vec<f64>>,
    },
}

impl Expression {
    pub fn parents(&self) -> Vec<&str> {
        match self {
            Expression::Uniform => Vec::new(),
            Expression::WeightedMean { parents, .. } => {
                parents.iter().map(|p| p.node.as_str()).collect()
            }
            Expression::Partitioned { parent, .. } | Expression::Arithmetic { parent, .. } => {
                vec![parent.as_str()]
            }
            Expression::ExplicitCpt { parents, .. } => parents.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<NodeGroup>,
    pub kind: NodeKind,
    pub expression: Expression,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesianNetwork {
    pub nodes: Vec<NodeSpec>,
}

pub const NETWORK_FORMAT: &str = "bnet-v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    format: String,
    nodes: Vec<NodeSpec>,
}

impl BayesianNetwork {
    /// Parses a `bnet-v1` document. Structure is checked by `compile`.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        if doc.format != NETWORK_FORMAT {
            return Err(Error::FormatVersion {
                expected: NETWORK_FORMAT.into(),
                found: doc.format,
            });
        }
        Ok(BayesianNetwork { nodes: doc.nodes })
    }

    pub fn to_text(&self) -> String {
        let doc = NetworkDocument {
            format: NETWORK_FORMAT.into(),
            nodes: self.nodes.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("network serializes") + "\n"
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut NodeSpec> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    /// Directed edges `(parent, child)` implied by the expressions.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| {
                n.expression
                    .parents()
                    .into_iter()
                    .map(move |p| (p.to_string(), n.id.clone()))
            })
            .collect()
    }
}

/// A single observation: a state name, or a numeric value that is mapped
/// to its containing bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Observation {
    Value(f64),
    State(String),
}

impl std::fmt::Display for Observation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observation::Value(v) => write!(f, "{v}"),
            Observation::State(s) => f.write_str(s),
        }
    }
}

/// Observations keyed by node id.
pub type Evidence = BTreeMap<String, Observation>;
