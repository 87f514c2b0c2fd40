//! Expansion of node expressions into conditional probability tables.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::dist::{self, Distribution};
use super::network::{BayesianNetwork, Expression, NodeGroup, NodeKind, Sign};
use crate::error::{Error, Result};

pub const COLUMN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompiledNode {
    pub id: String,
    pub name: String,
    pub group: Option<NodeGroup>,
    pub kind: NodeKind,
    pub labels: Vec<String>,
    /// Indices into [`CompiledNetwork::nodes`], in expression order.
    pub parents: Vec<usize>,
    /// One column of `card` probabilities per parent configuration,
    /// configurations row-major over `parents`.
    pub cpt: Vec<f64>,
}

impl CompiledNode {
    pub fn card(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, config: usize) -> &[f64] {
        let c = self.card();
        &self.cpt[config * c..(config + 1) * c]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A network with every table materialized, nodes in topological order.
#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    nodes: Vec<CompiledNode>,
    index: HashMap<String, usize>,
    source: BayesianNetwork,
    fingerprint: String,
}

impl CompiledNetwork {
    pub fn nodes(&self) -> &[CompiledNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &CompiledNode {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn source(&self) -> &BayesianNetwork {
        &self.source
    }

    /// Content hash of the compiled tables; equal for identical networks.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn cards(&self) -> Vec<usize> {
        self.nodes.iter().map(CompiledNode::card).collect()
    }
}

fn topological_order(net: &BayesianNetwork, index: &HashMap<&str, usize>) -> Result<Vec<usize>> {
    let n = net.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (i, node) in net.nodes.iter().enumerate() {
        for p in node.expression.parents() {
            let pi = index[p];
            indegree[i] += 1;
            children[pi].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
        return Err(Error::Cycle(net.nodes[stuck].id.clone()));
    }
    Ok(order)
}

fn invalid(node: &str, message: impl Into<String>) -> Error {
    Error::InvalidNode {
        node: node.to_string(),
        message: message.into(),
    }
}

/// Compiles every expression into an explicit CPT.
pub fn compile(network: &BayesianNetwork) -> Result<CompiledNetwork> {
    let mut by_id: HashMap<&str, usize> = HashMap::new();
    for (i, node) in network.nodes.iter().enumerate() {
        if by_id.insert(node.id.as_str(), i).is_some() {
            return Err(Error::DuplicateId {
                kind: "node",
                id: node.id.clone(),
            });
        }
        node.kind.validate(&node.id)?;
    }
    for node in &network.nodes {
        let parents = node.expression.parents();
        for p in &parents {
            if !by_id.contains_key(p) {
                return Err(Error::DanglingReference {
                    from: format!("node `{}`", node.id),
                    kind: "node",
                    id: p.to_string(),
                });
            }
        }
        let unique: BTreeSet<&&str> = parents.iter().collect();
        if unique.len() != parents.len() {
            return Err(invalid(&node.id, "parent listed twice"));
        }
    }

    let order = topological_order(network, &by_id)?;
    let mut position = vec![0usize; order.len()];
    for (pos, &i) in order.iter().enumerate() {
        position[i] = pos;
    }

    let mut nodes: Vec<CompiledNode> = Vec::with_capacity(order.len());
    for &i in &order {
        let spec = &network.nodes[i];
        let parents: Vec<usize> = spec
            .expression
            .parents()
            .iter()
            .map(|p| position[by_id[p]])
            .collect();
        let parent_kinds: Vec<&NodeKind> = parents.iter().map(|&p| &nodes[p].kind).collect();
        let cpt = build_cpt(&spec.id, &spec.kind, &spec.expression, &parent_kinds)?;
        let card = spec.kind.card();
        for (c, col) in cpt.chunks(card).enumerate() {
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > COLUMN_TOLERANCE || col.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::BadColumn {
                    node: spec.id.clone(),
                    column: c,
                    sum,
                });
            }
        }
        nodes.push(CompiledNode {
            id: spec.id.clone(),
            name: spec.name.clone(),
            group: spec.group,
            kind: spec.kind.clone(),
            labels: spec.kind.state_labels(),
            parents,
            cpt,
        });
    }

    let mut hasher = Sha256::new();
    for n in &nodes {
        hasher.update(n.id.as_bytes());
        hasher.update([0u8]);
        for p in &n.parents {
            hasher.update((*p as u64).to_le_bytes());
        }
        for v in &n.cpt {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    let fingerprint = hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect();

    let index = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.clone(), i))
        .collect();
    Ok(CompiledNetwork {
        nodes,
        index,
        source: network.clone(),
        fingerprint,
    })
}

/// Enumerates parent configurations row-major (last parent fastest).
fn configurations(cards: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = cards.iter().product();
    let mut current = vec![0usize; cards.len()];
    (0..total).map(move |i| {
        let out = current.clone();
        if i + 1 < total {
            for k in (0..cards.len()).rev() {
                current[k] += 1;
                if current[k] < cards[k] {
                    break;
                }
                current[k] = 0;
            }
        }
        out
    })
}

fn build_cpt(
    id: &str,
    kind: &NodeKind,
    expr: &Expression,
    parents: &[&NodeKind],
) -> Result<Vec<f64>> {
    let card = kind.card();
    let edges = kind.edges();
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    let parent_cards: Vec<usize> = parents.iter().map(|k| k.card()).collect();
    let discretize = |d: Distribution| -> Result<Vec<f64>> {
        dist::discretize(&d, &edges).map_err(|e| invalid(id, e.to_string()))
    };

    match expr {
        Expression::Uniform => Ok(vec![1.0 / card as f64; card]),
        Expression::WeightedMean {
            parents: weighted,
            variance,
        } => {
            if !(*variance > 0.0) {
                return Err(invalid(id, "weighted-mean variance must be positive"));
            }
            if weighted.is_empty() {
                return Err(invalid(id, "weighted mean needs at least one parent"));
            }
            for w in weighted {
                if !(w.weight > 0.0) || !w.weight.is_finite() {
                    return Err(Error::NonPositiveWeight {
                        parent: w.node.clone(),
                        child: id.to_string(),
                        weight: w.weight,
                    });
                }
            }
            let mids: Vec<Vec<f64>> = parents.iter().map(|k| k.unit_midpoints()).collect();
            let total_weight: f64 = weighted.iter().map(|w| w.weight).sum();
            let scale = hi - lo;
            let mut cpt = Vec::with_capacity(card * parent_cards.iter().product::<usize>());
            for config in configurations(&parent_cards) {
                let mean = weighted
                    .iter()
                    .zip(&config)
                    .enumerate()
                    .map(|(k, (w, &s))| {
                        let m = mids[k][s];
                        let v = match w.sign {
                            Sign::Positive => m,
                            Sign::Negative => 1.0 - m,
                        };
                        w.weight * v
                    })
                    .sum::<f64>()
                    / total_weight;
                let d = Distribution::tnormal(lo + mean * scale, variance * scale * scale, lo, hi);
                cpt.extend(discretize(d)?);
            }
            Ok(cpt)
        }
        Expression::Partitioned { table, .. } => {
            let labels = parents[0].state_labels();
            let mut cpt = Vec::with_capacity(card * labels.len());
            for entry in table {
                if !labels.contains(&entry.state) {
                    return Err(invalid(
                        id,
                        format!("partition entry for unknown parent state `{}`", entry.state),
                    ));
                }
            }
            for label in &labels {
                let mut matching = table.iter().filter(|e| &e.state == label);
                let entry = matching
                    .next()
                    .ok_or_else(|| invalid(id, format!("no partition entry for state `{label}`")))?;
                if matching.next().is_some() {
                    return Err(invalid(id, format!("state `{label}` partitioned twice")));
                }
                cpt.extend(discretize(entry.distribution)?);
            }
            Ok(cpt)
        }
        Expression::Arithmetic {
            intercept,
            slope,
            variance,
            ..
        } => {
            if !(*variance > 0.0) {
                return Err(invalid(id, "arithmetic noise variance must be positive"));
            }
            let mut cpt = Vec::new();
            for m in parents[0].midpoints() {
                let d = Distribution::tnormal(intercept + slope * m, *variance, lo, hi);
                cpt.extend(discretize(d)?);
            }
            Ok(cpt)
        }
        Expression::ExplicitCpt { columns, .. } => {
            let expected: usize = parent_cards.iter().product();
            if columns.len() != expected {
                return Err(invalid(
                    id,
                    format!("expected {expected} CPT columns, found {}", columns.len()),
                ));
            }
            if let Some(bad) = columns.iter().position(|c| c.len() != card) {
                return Err(invalid(id, format!("CPT column {bad} has wrong length")));
            }
            Ok(columns.iter().flatten().copied().collect())
        }
    }
}
