//! Exact inference by variable elimination (sum-product for marginals,
//! max-product for the most probable explanation).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::compile::CompiledNetwork;
use super::dist;
use super::factor::Factor;
use super::network::{Evidence, NodeKind, Observation};
use crate::error::{Error, Result};

/// Evidence resolved to `(node index, state index)` pairs.
pub type ResolvedEvidence = BTreeMap<usize, usize>;

/// Maps named observations onto state indices.
pub fn resolve_evidence(net: &CompiledNetwork, evidence: &Evidence) -> Result<ResolvedEvidence> {
    let mut out = BTreeMap::new();
    for (id, obs) in evidence {
        let idx = net.index_of(id)?;
        out.insert(idx, resolve_observation(net, idx, obs)?);
    }
    Ok(out)
}

pub fn resolve_observation(net: &CompiledNetwork, idx: usize, obs: &Observation) -> Result<usize> {
    let node = net.node(idx);
    let err = |message: String| Error::InvalidEvidence {
        node: node.id.clone(),
        message,
    };
    match obs {
        Observation::State(label) => node
            .state_index(label)
            .ok_or_else(|| err(format!("unknown state `{label}`"))),
        Observation::Value(v) => match &node.kind {
            NodeKind::Interval { edges, .. } => dist::bin_index(edges, *v).ok_or_else(|| {
                err(format!(
                    "value {v} outside [{}, {}]",
                    edges[0],
                    edges[edges.len() - 1]
                ))
            }),
            NodeKind::Ranked { .. } => Err(err("ranked nodes take a state name".into())),
        },
    }
}

/// Mean, standard deviation and modal bin of a distribution over bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub mode: usize,
    pub mode_label: String,
}

impl Summary {
    /// Ties on the mode resolve to the lower bin.
    pub fn from_probabilities(probs: &[f64], midpoints: &[f64], labels: &[String]) -> Self {
        let mean: f64 = probs.iter().zip(midpoints).map(|(p, m)| p * m).sum();
        let var: f64 = probs
            .iter()
            .zip(midpoints)
            .map(|(p, m)| p * (m - mean) * (m - mean))
            .sum();
        let mut mode = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[mode] {
                mode = i;
            }
        }
        Summary {
            mean,
            sd: var.max(0.0).sqrt(),
            mode,
            mode_label: labels[mode].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePosterior {
    pub id: String,
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    /// Present for interval nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub network: String,
    pub nodes: Vec<NodePosterior>,
}

impl Posterior {
    pub fn node(&self, id: &str) -> Result<&NodePosterior> {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }
}

fn cpt_factor(net: &CompiledNetwork, idx: usize) -> Factor {
    let node = net.node(idx);
    let mut vars = node.parents.clone();
    vars.push(idx);
    let cards: Vec<usize> = vars.iter().map(|&v| net.node(v).card()).collect();
    Factor::from_table(&vars, &cards, &node.cpt)
}

/// Nodes whose CPTs can influence a query: ancestors of the query and
/// evidence nodes. Everything else sums out to one.
fn relevant_nodes(net: &CompiledNetwork, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut keep = vec![false; net.len()];
    let mut stack: Vec<usize> = seeds.into_iter().collect();
    while let Some(i) = stack.pop() {
        if keep[i] {
            continue;
        }
        keep[i] = true;
        stack.extend(net.node(i).parents.iter().copied());
    }
    keep
}

fn evidence_factors(net: &CompiledNetwork, keep: &[bool], evidence: &ResolvedEvidence) -> Vec<Factor> {
    (0..net.len())
        .filter(|&i| keep[i])
        .map(|i| {
            let mut f = cpt_factor(net, i);
            for (&var, &state) in evidence {
                if f.contains(var) {
                    f = f.reduce(var, state);
                }
            }
            f
        })
        .collect()
}

/// Greedy min-fill elimination order; ties go to the smaller clique
/// weight, then the lower variable index.
pub fn min_fill_order(factors: &[Factor], vars: &BTreeSet<usize>, cards: &[usize]) -> Vec<usize> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = vars.iter().map(|&v| (v, BTreeSet::new())).collect();
    for f in factors {
        for &a in &f.vars {
            for &b in &f.vars {
                if a != b && vars.contains(&a) && vars.contains(&b) {
                    adj.get_mut(&a).unwrap().insert(b);
                }
            }
        }
    }
    let mut order = Vec::with_capacity(vars.len());
    while !adj.is_empty() {
        let mut best: Option<(usize, f64, usize)> = None;
        for (&v, nbrs) in &adj {
            let nv: Vec<usize> = nbrs.iter().copied().collect();
            let mut fill = 0;
            for (i, a) in nv.iter().enumerate() {
                for b in &nv[i + 1..] {
                    if !adj[a].contains(b) {
                        fill += 1;
                    }
                }
            }
            let weight: f64 = nv.iter().map(|&n| cards[n] as f64).product::<f64>() * cards[v] as f64;
            let better = match best {
                None => true,
                Some((bf, bw, _)) => fill < bf || (fill == bf && weight < bw),
            };
            if better {
                best = Some((fill, weight, v));
            }
        }
        let (_, _, v) = best.unwrap();
        let nbrs: Vec<usize> = adj.remove(&v).unwrap().into_iter().collect();
        for a in &nbrs {
            let set = adj.get_mut(a).unwrap();
            set.remove(&v);
            for b in &nbrs {
                if a != b {
                    set.insert(*b);
                }
            }
        }
        order.push(v);
    }
    order
}

fn eliminate_sum(mut factors: Vec<Factor>, order: &[usize]) -> Vec<Factor> {
    for &v in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(v));
        factors = without;
        if let Some(combined) = with.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(combined.sum_out(v));
        }
    }
    factors
}

/// Unnormalized marginal of `query` (over its states) given evidence.
fn query_unnormalized(net: &CompiledNetwork, query: usize, evidence: &ResolvedEvidence) -> Factor {
    let keep = relevant_nodes(net, std::iter::once(query).chain(evidence.keys().copied()));
    let factors = evidence_factors(net, &keep, evidence);
    let vars: BTreeSet<usize> = (0..net.len())
        .filter(|&i| keep[i] && i != query && !evidence.contains_key(&i))
        .collect();
    let order = min_fill_order(&factors, &vars, &net.cards());
    eliminate_sum(factors, &order)
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .unwrap_or_else(|| Factor::scalar(1.0))
}

/// Probability of the evidence under the network.
pub fn evidence_probability(net: &CompiledNetwork, evidence: &ResolvedEvidence) -> f64 {
    let keep = relevant_nodes(net, evidence.keys().copied());
    let factors = evidence_factors(net, &keep, evidence);
    let vars: BTreeSet<usize> = (0..net.len())
        .filter(|&i| keep[i] && !evidence.contains_key(&i))
        .collect();
    let order = min_fill_order(&factors, &vars, &net.cards());
    eliminate_sum(factors, &order)
        .iter()
        .map(Factor::total)
        .product()
}

/// Posterior distribution of a single node.
pub fn marginal(net: &CompiledNetwork, node: usize, evidence: &ResolvedEvidence) -> Result<Vec<f64>> {
    let card = net.node(node).card();
    if let Some(&state) = evidence.get(&node) {
        if !(evidence_probability(net, evidence) > 0.0) {
            return Err(Error::ImpossibleEvidence);
        }
        let mut v = vec![0.0; card];
        v[state] = 1.0;
        return Ok(v);
    }
    let f = query_unnormalized(net, node, evidence);
    let z = f.total();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::ImpossibleEvidence);
    }
    Ok(f.values.iter().map(|v| v / z).collect())
}

fn node_posterior(net: &CompiledNetwork, idx: usize, probabilities: Vec<f64>) -> NodePosterior {
    let node = net.node(idx);
    let summary = node.kind.is_interval().then(|| {
        Summary::from_probabilities(&probabilities, &node.kind.midpoints(), &node.labels)
    });
    NodePosterior {
        id: node.id.clone(),
        labels: node.labels.clone(),
        probabilities,
        summary,
    }
}

/// Exact posterior marginals of every node, in compiled (topological) order.
pub fn infer(net: &CompiledNetwork, evidence: &Evidence) -> Result<Posterior> {
    let resolved = resolve_evidence(net, evidence)?;
    infer_resolved(net, &resolved)
}

pub fn infer_resolved(net: &CompiledNetwork, evidence: &ResolvedEvidence) -> Result<Posterior> {
    if !(evidence_probability(net, evidence) > 0.0) {
        return Err(Error::ImpossibleEvidence);
    }
    let nodes = (0..net.len())
        .map(|i| Ok(node_posterior(net, i, marginal(net, i, evidence)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Posterior {
        network: net.fingerprint().to_string(),
        nodes,
    })
}

/// Posterior of a single node, with summary when it is an interval node.
pub fn infer_node(net: &CompiledNetwork, evidence: &Evidence, node: &str) -> Result<NodePosterior> {
    let resolved = resolve_evidence(net, evidence)?;
    let idx = net.index_of(node)?;
    Ok(node_posterior(net, idx, marginal(net, idx, &resolved)?))
}

/// Summary statistics of an interval node's posterior.
pub fn summarize(net: &CompiledNetwork, posterior: &Posterior, node: &str) -> Result<Summary> {
    let idx = net.index_of(node)?;
    let compiled = net.node(idx);
    if !compiled.kind.is_interval() {
        return Err(Error::NotInterval(node.to_string()));
    }
    let np = posterior.node(node)?;
    Ok(Summary::from_probabilities(
        &np.probabilities,
        &compiled.kind.midpoints(),
        &compiled.labels,
    ))
}

/// A most probable full assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// `(node id, state label)` in compiled order.
    pub assignment: Vec<(String, String)>,
    pub states: Vec<usize>,
    /// Joint probability `P(assignment)`, evidence included.
    pub probability: f64,
}

/// Most probable explanation by max-product elimination with traceback.
/// Ties between states resolve to the lowest state index.
pub fn mpe(net: &CompiledNetwork, evidence: &Evidence) -> Result<Explanation> {
    let resolved = resolve_evidence(net, evidence)?;
    let keep = vec![true; net.len()];
    let mut factors = evidence_factors(net, &keep, &resolved);
    let vars: BTreeSet<usize> = (0..net.len()).filter(|i| !resolved.contains_key(i)).collect();
    let order = min_fill_order(&factors, &vars, &net.cards());

    let mut combined_at = Vec::with_capacity(order.len());
    for &v in &order {
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(v));
        factors = without;
        let combined = with
            .into_iter()
            .reduce(|a, b| a.product(&b))
            .unwrap_or_else(|| Factor::scalar(1.0));
        factors.push(combined.max_out(v));
        combined_at.push(combined);
    }
    let best: f64 = factors.iter().map(Factor::total).product();
    if !(best > 0.0) {
        return Err(Error::ImpossibleEvidence);
    }

    let mut states = vec![0usize; net.len()];
    for (&v, &s) in &resolved {
        states[v] = s;
    }
    for (k, &v) in order.iter().enumerate().rev() {
        let f = &combined_at[k];
        let mut best_state = 0;
        let mut best_value = f64::NEG_INFINITY;
        for s in 0..net.node(v).card() {
            states[v] = s;
            let val = if f.contains(v) { f.value_at(&states) } else { 1.0 };
            if val > best_value {
                best_value = val;
                best_state = s;
            }
        }
        states[v] = best_state;
    }
    let probability = joint_probability(net, &states);
    Ok(Explanation {
        assignment: states
            .iter()
            .enumerate()
            .map(|(i, &s)| (net.node(i).id.clone(), net.node(i).labels[s].clone()))
            .collect(),
        states,
        probability,
    })
}

/// Product of CPT entries for a full assignment.
pub fn joint_probability(net: &CompiledNetwork, states: &[usize]) -> f64 {
    net.nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let mut config = 0;
            for &p in &node.parents {
                config = config * net.node(p).card() + states[p];
            }
            node.column(config)[states[i]]
        })
        .product()
}
