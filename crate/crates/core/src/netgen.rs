//! Derivation of a Bayesian network from a quality model and a goal:
//! activity nodes from the goal's activity subtree, fact nodes from their
//! impacts, indicator nodes attached to both, and generated NPTs.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::engine::{
    BayesianNetwork, Distribution, Expression, NodeGroup, NodeKind, NodeSpec, PartitionEntry, Sign,
    WeightedParent,
};
use crate::error::{Error, Result};
use crate::model::{self, QualityModel};

pub const GOAL_FORMAT: &str = "goal-v1";

/// Whether larger indicator values signal a higher state of the node the
/// indicator is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    Direct,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scale {
    pub edges: Vec<f64>,
    #[serde(default)]
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IndicatorNpt {
    /// One distribution per state of the attached node.
    Partitioned { table: Vec<PartitionEntry> },
    /// `intercept + slope * midpoint` plus TNormal noise.
    Arithmetic {
        intercept: f64,
        slope: f64,
        variance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    pub id: String,
    pub name: String,
    pub attached_to: String,
    pub scale: Scale,
    pub polarity: Polarity,
    pub npt: IndicatorNpt,
}

impl IndicatorSpec {
    /// True when the conditional means move with the attached node's
    /// state in the direction the polarity declares.
    pub fn is_polarity_consistent(&self, states: &[String]) -> bool {
        let means: Vec<f64> = match &self.npt {
            IndicatorNpt::Partitioned { table } => states
                .iter()
                .filter_map(|s| table.iter().find(|e| &e.state == s))
                .map(|e| e.distribution.moments().mean)
                .collect(),
            IndicatorNpt::Arithmetic { slope, .. } => {
                return match self.polarity {
                    Polarity::Direct => *slope >= 0.0,
                    Polarity::Inverse => *slope <= 0.0,
                }
            }
        };
        means.windows(2).all(|w| match self.polarity {
            Polarity::Direct => w[0] <= w[1],
            Polarity::Inverse => w[0] >= w[1],
        })
    }
}

/// Goal, question and metric plus the activity the goal is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub goal: String,
    #[serde(default)]
    pub question: String,
    #[serde(default)]
    pub metric: String,
    pub target_activity: String,
    pub activity_indicator: IndicatorSpec,
}

/// Explicit pruning of the quality model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub included_activities: BTreeSet<String>,
    pub included_facts: BTreeSet<String>,
}

impl Selection {
    /// Every activity under the target and every fact impacting one.
    pub fn everything(model: &QualityModel, target: &str) -> Result<Self> {
        let included_activities: BTreeSet<String> = model
            .activity_subtree(target)?
            .into_iter()
            .map(String::from)
            .collect();
        let included_facts = model
            .impacts
            .iter()
            .filter(|i| included_activities.contains(&i.activity))
            .map(|i| i.fact.clone())
            .collect();
        Ok(Selection {
            included_activities,
            included_facts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactPrior {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactWeight {
    pub fact: String,
    pub activity: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NptConfig {
    pub ranked_states: Vec<String>,
    pub state_midpoints: Vec<f64>,
    pub activity_variance: f64,
    pub fact_prior: FactPrior,
    pub impact_weights: Vec<ImpactWeight>,
}

impl Default for NptConfig {
    fn default() -> Self {
        NptConfig {
            ranked_states: vec!["low".into(), "medium".into(), "high".into()],
            state_midpoints: vec![1.0 / 6.0, 0.5, 5.0 / 6.0],
            activity_variance: 0.001,
            fact_prior: FactPrior::Uniform,
            impact_weights: Vec::new(),
        }
    }
}

impl NptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.ranked_states.is_empty() || self.ranked_states.len() != self.state_midpoints.len() {
            return bad("one midpoint per ranked state required");
        }
        if self.state_midpoints.iter().any(|m| !(0.0..=1.0).contains(m))
            || self.state_midpoints.windows(2).any(|w| !(w[0] < w[1]))
        {
            return bad("midpoints must be strictly increasing inside [0,1]");
        }
        if !(self.activity_variance > 0.0) {
            return bad("activity variance must be positive");
        }
        Ok(())
    }

    fn weight(&self, fact: &str, activity: &str) -> f64 {
        self.impact_weights
            .iter()
            .find(|w| w.fact == fact && w.activity == activity)
            .map_or(1.0, |w| w.weight)
    }

    fn ranked_kind(&self) -> NodeKind {
        NodeKind::Ranked {
            states: self.ranked_states.clone(),
            midpoints: self.state_midpoints.clone(),
        }
    }
}

/// Everything needed to derive a network from a model: the `goal-v1` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDocument {
    pub format: String,
    pub goal: GoalSpec,
    pub selection: Selection,
    /// Indicators for facts and any additional activities.
    pub indicators: Vec<IndicatorSpec>,
    #[serde(default)]
    pub npt: NptConfig,
}

impl GoalDocument {
    pub fn new(goal: GoalSpec, selection: Selection, indicators: Vec<IndicatorSpec>, npt: NptConfig) -> Self {
        GoalDocument {
            format: GOAL_FORMAT.into(),
            goal,
            selection,
            indicators,
            npt,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: GoalDocument = serde_json::from_str(text)?;
        if doc.format != GOAL_FORMAT {
            return Err(Error::FormatVersion {
                expected: GOAL_FORMAT.into(),
                found: doc.format,
            });
        }
        Ok(doc)
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("goal serializes") + "\n"
    }

    /// The goal's activity indicator followed by the other indicators.
    pub fn all_indicators(&self) -> Vec<IndicatorSpec> {
        std::iter::once(self.goal.activity_indicator.clone())
            .chain(self.indicators.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyNode {
    pub id: String,
    pub name: String,
    pub group: NodeGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyEdge {
    pub from: String,
    pub to: String,
    /// Impact sign for fact-to-activity edges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub nodes: Vec<TopologyNode>,
    pub edges: Vec<TopologyEdge>,
}

impl NetworkTopology {
    pub fn count(&self, group: NodeGroup) -> usize {
        self.nodes.iter().filter(|n| n.group == group).count()
    }

    pub fn in_edges(&self, node: &str) -> Vec<&TopologyEdge> {
        self.edges.iter().filter(|e| e.to == node).collect()
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<&str>> {
        let mut indegree: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| self.edges.iter().filter(|e| e.to == n.id).count())
            .collect();
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::new();
        while let Some(i) = ready.pop() {
            order.push(self.nodes[i].id.as_str());
            for e in self.edges.iter().filter(|e| e.from == self.nodes[i].id) {
                let j = self.nodes.iter().position(|n| n.id == e.to)?;
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }
}

/// Builds the node and edge sets: the target activity, the selected
/// activities below it, the selected facts impacting them, and one node per
/// indicator.
pub fn derive_topology(
    model: &QualityModel,
    goal: &GoalSpec,
    selection: &Selection,
    indicators: &[IndicatorSpec],
) -> Result<NetworkTopology> {
    let report = model::validate(model);
    if !report.is_valid() {
        return Err(Error::InvalidModel(report.findings.len()));
    }
    let subtree = model.activity_subtree(&goal.target_activity)?;
    for a in &selection.included_activities {
        if model.activity(a).is_none() {
            return Err(Error::UnknownActivity(a.clone()));
        }
        if !subtree.contains(&a.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "selected activity `{a}` is not below `{}`",
                goal.target_activity
            )));
        }
    }
    for f in &selection.included_facts {
        if model.fact(f).is_none() {
            return Err(Error::DanglingReference {
                from: "selection".into(),
                kind: "fact",
                id: f.clone(),
            });
        }
    }

    let mut topo = NetworkTopology::default();
    let included: Vec<&str> = subtree
        .iter()
        .copied()
        .filter(|a| *a == goal.target_activity || selection.included_activities.contains(*a))
        .collect();
    for &a in &included {
        topo.nodes.push(TopologyNode {
            id: a.to_string(),
            name: model.activity(a).unwrap().name.clone(),
            group: NodeGroup::Activity,
        });
    }
    for &a in included.iter().skip(1) {
        // nearest included ancestor
        let mut cur = model.activity(a).unwrap().parent.as_deref();
        while let Some(p) = cur {
            if included.contains(&p) {
                topo.edges.push(TopologyEdge {
                    from: a.to_string(),
                    to: p.to_string(),
                    sign: None,
                });
                break;
            }
            cur = model.activity(p).unwrap().parent.as_deref();
        }
    }

    for fact in model.fact_order() {
        if !selection.included_facts.contains(&fact.id) {
            continue;
        }
        let impacts: Vec<_> = included
            .iter()
            .flat_map(|a| model.impacts.iter().filter(move |i| i.activity == *a && i.fact == fact.id))
            .collect();
        if impacts.is_empty() {
            return Err(Error::UnreachableFact {
                fact: fact.id.clone(),
                target: goal.target_activity.clone(),
            });
        }
        topo.nodes.push(TopologyNode {
            id: fact.id.clone(),
            name: model.fact_label(fact),
            group: NodeGroup::Fact,
        });
        for i in impacts {
            topo.edges.push(TopologyEdge {
                from: fact.id.clone(),
                to: i.activity.clone(),
                sign: Some(i.sign),
            });
        }
    }

    let mut ids: HashSet<String> = topo.nodes.iter().map(|n| n.id.clone()).collect();
    for ind in std::iter::once(&goal.activity_indicator).chain(indicators) {
        if !ids.contains(&ind.attached_to) {
            return Err(Error::DetachedIndicator {
                indicator: ind.id.clone(),
                node: ind.attached_to.clone(),
            });
        }
        if !ids.insert(ind.id.clone()) {
            return Err(Error::DuplicateId {
                kind: "node",
                id: ind.id.clone(),
            });
        }
    }
    for ind in std::iter::once(&goal.activity_indicator).chain(indicators) {
        topo.nodes.push(TopologyNode {
            id: ind.id.clone(),
            name: ind.name.clone(),
            group: NodeGroup::Indicator,
        });
        topo.edges.push(TopologyEdge {
            from: ind.attached_to.clone(),
            to: ind.id.clone(),
            sign: None,
        });
    }

    let indicated: HashSet<&str> = std::iter::once(&goal.activity_indicator)
        .chain(indicators)
        .map(|i| i.attached_to.as_str())
        .collect();
    if let Some(bare) = topo
        .nodes
        .iter()
        .find(|n| n.group == NodeGroup::Fact && !indicated.contains(n.id.as_str()))
    {
        return Err(Error::MissingIndicator(bare.id.clone()));
    }
    debug_assert!(topo.topological_order().is_some());
    Ok(topo)
}

/// Fills in node kinds and NPT expressions.
pub fn synthesize_network(
    topology: &NetworkTopology,
    config: &NptConfig,
    indicators: &[IndicatorSpec],
) -> Result<BayesianNetwork> {
    config.validate()?;
    if topology.topological_order().is_none() {
        let first = topology.nodes.first().map_or(String::new(), |n| n.id.clone());
        return Err(Error::Cycle(first));
    }
    let mut nodes = Vec::with_capacity(topology.nodes.len());
    for node in &topology.nodes {
        let spec = match node.group {
            NodeGroup::Activity | NodeGroup::Fact => {
                let parents: Vec<WeightedParent> = topology
                    .in_edges(&node.id)
                    .into_iter()
                    .map(|e| {
                        let weight = match node.group {
                            NodeGroup::Activity if e.sign.is_some() => config.weight(&e.from, &node.id),
                            _ => 1.0,
                        };
                        WeightedParent {
                            node: e.from.clone(),
                            weight,
                            sign: e.sign.unwrap_or(Sign::Positive),
                        }
                    })
                    .collect();
                if let Some(w) = parents.iter().find(|p| !(p.weight > 0.0)) {
                    return Err(Error::NonPositiveWeight {
                        parent: w.node.clone(),
                        child: node.id.clone(),
                        weight: w.weight,
                    });
                }
                let expression = if parents.is_empty() {
                    Expression::Uniform
                } else {
                    Expression::WeightedMean {
                        parents,
                        variance: config.activity_variance,
                    }
                };
                NodeSpec {
                    id: node.id.clone(),
                    name: node.name.clone(),
                    group: Some(node.group),
                    kind: config.ranked_kind(),
                    expression,
                }
            }
            NodeGroup::Indicator => {
                let ind = indicators
                    .iter()
                    .find(|i| i.id == node.id)
                    .ok_or_else(|| Error::MissingIndicatorSpec(node.id.clone()))?;
                indicator_node(ind, config)?
            }
        };
        nodes.push(spec);
    }
    Ok(BayesianNetwork { nodes })
}

fn indicator_node(ind: &IndicatorSpec, config: &NptConfig) -> Result<NodeSpec> {
    let expression = match &ind.npt {
        IndicatorNpt::Partitioned { table } => {
            for state in &config.ranked_states {
                let n = table.iter().filter(|e| &e.state == state).count();
                if n != 1 {
                    return Err(Error::InvalidNode {
                        node: ind.id.clone(),
                        message: format!("state `{state}` is covered {n} times"),
                    });
                }
            }
            if table.len() != config.ranked_states.len() {
                return Err(Error::InvalidNode {
                    node: ind.id.clone(),
                    message: "partition names an unknown state".into(),
                });
            }
            Expression::Partitioned {
                parent: ind.attached_to.clone(),
                table: table.clone(),
            }
        }
        IndicatorNpt::Arithmetic {
            intercept,
            slope,
            variance,
        } => Expression::Arithmetic {
            parent: ind.attached_to.clone(),
            intercept: *intercept,
            slope: *slope,
            variance: *variance,
        },
    };
    Ok(NodeSpec {
        id: ind.id.clone(),
        name: ind.name.clone(),
        group: Some(NodeGroup::Indicator),
        kind: NodeKind::Interval {
            edges: ind.scale.edges.clone(),
            unit: ind.scale.unit.clone(),
        },
        expression,
    })
}

/// Topology plus synthesis in one step.
pub fn derive_network(model: &QualityModel, doc: &GoalDocument) -> Result<BayesianNetwork> {
    let topology = derive_topology(model, &doc.goal, &doc.selection, &doc.indicators)?;
    synthesize_network(&topology, &doc.npt, &doc.all_indicators())
}

/// Goal, question and metric bound to network nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GqmTrace {
    pub goal: String,
    pub question: String,
    pub metric: String,
    pub target_node: String,
    pub indicator_node: String,
}

impl std::fmt::Display for GqmTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "goal:     {}", self.goal)?;
        writeln!(f, "question: {}", self.question)?;
        writeln!(f, "metric:   {}", self.metric)?;
        writeln!(f, "activity: {}", self.target_node)?;
        writeln!(f, "measured: {}", self.indicator_node)
    }
}

pub fn gqm_trace(goal: &GoalSpec) -> GqmTrace {
    let metric = if goal.metric.is_empty() {
        goal.activity_indicator.name.clone()
    } else {
        goal.metric.clone()
    };
    GqmTrace {
        goal: goal.goal.clone(),
        question: goal.question.clone(),
        metric,
        target_node: goal.target_activity.clone(),
        indicator_node: goal.activity_indicator.id.clone(),
    }
}

/// Partitioned TNormal table on `[lower, upper]`, one `(mean, variance)`
/// per state.
pub fn tnormal_table(states: &[String], params: &[(f64, f64)], lower: f64, upper: f64) -> Vec<PartitionEntry> {
    states
        .iter()
        .zip(params)
        .map(|(s, &(mean, variance))| PartitionEntry {
            state: s.clone(),
            distribution: Distribution::tnormal(mean, variance, lower, upper),
        })
        .collect()
}
