//! Independent oracles shared by the integration tests: adaptive
//! Gauss-Kronrod quadrature and brute-force joint enumeration over
//! randomly generated networks.

#![allow(dead_code, clippy::excessive_precision)]

use qualnet::engine::{BayesianNetwork, Evidence, Expression, NodeKind, NodeSpec, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth - 1) + go(f, m, b, 0.5 * tol, depth - 1)
    }
    go(f, a, b, tol, 40)
}

/// Unnormalized Normal density.
pub fn normal_kernel(mean: f64, variance: f64) -> impl Fn(f64) -> f64 {
    move |x| (-(x - mean).powi(2) / (2.0 * variance)).exp()
}

pub fn exponential_kernel(mean: f64) -> impl Fn(f64) -> f64 {
    move |x| (-x / mean).exp()
}

/// Bin masses of a density kernel over `edges`, normalized on the range.
pub fn quadrature_masses(kernel: &dyn Fn(f64) -> f64, edges: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = edges
        .windows(2)
        .map(|w| integrate(kernel, w[0], w[1], 1e-16))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|m| m / total).collect()
}

/// Mean and variance of the kernel restricted to `[a, b]`.
pub fn quadrature_moments(kernel: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let z = integrate(kernel, a, b, 1e-16);
    let m = integrate(&|x| x * kernel(x), a, b, 1e-16) / z;
    let v = integrate(&|x| (x - m).powi(2) * kernel(x), a, b, 1e-16) / z;
    (m, v)
}

/// A random discrete network together with its tables in the oracle's own
/// layout.
pub struct RandomNet {
    pub network: BayesianNetwork,
    pub cards: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// `tables[i][config][state]`, configurations row-major over parents.
    pub tables: Vec<Vec<Vec<f64>>>,
}

pub const MAX_JOINT: usize = 200_000;

pub fn random_net(rng: &mut ChaCha8Rng, max_nodes: usize, max_states: usize) -> RandomNet {
    let n = rng.gen_range(1..=max_nodes);
    let mut cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_states)).collect();
    while cards.iter().product::<usize>() > MAX_JOINT {
        let i = rng.gen_range(0..n);
        if cards[i] > 2 {
            cards[i] -= 1;
        }
    }
    let mut parents = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let mut ps: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.3)).collect();
        ps.truncate(3);
        let configs: usize = ps.iter().map(|&p| cards[p]).product();
        let table: Vec<Vec<f64>> = (0..configs)
            .map(|_| {
                let mut col: Vec<f64> = (0..cards[i])
                    .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..1.0) })
                    .collect();
                if col.iter().all(|&p| p == 0.0) {
                    col[0] = 1.0;
                }
                let s: f64 = col.iter().sum();
                col.iter().map(|p| p / s).collect()
            })
            .collect();
        parents.push(ps);
        tables.push(table);
    }
    // declaration order is shuffled so compile has to sort topologically
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let nodes = order
        .iter()
        .map(|&i| NodeSpec {
            id: node_id(i),
            name: String::new(),
            group: None,
            kind: NodeKind::Ranked {
                states: (0..cards[i]).map(|s| format!("s{s}")).collect(),
                midpoints: (0..cards[i]).map(|s| (s as f64 + 0.5) / cards[i] as f64).collect(),
            },
            expression: Expression::ExplicitCpt {
                parents: parents[i].iter().map(|&p| node_id(p)).collect(),
                columns: tables[i].clone(),
            },
        })
        .collect();
    RandomNet {
        network: BayesianNetwork { nodes },
        cards,
        parents,
        tables,
    }
}

pub fn node_id(i: usize) -> String {
    format!("v{i}")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Evidence on a random subset of nodes, as `(node, state)` pairs.
pub fn random_evidence(rng: &mut ChaCha8Rng, net: &RandomNet) -> Vec<(usize, usize)> {
    let mut ev = Vec::new();
    for (i, &card) in net.cards.iter().enumerate() {
        if rng.gen_bool(0.25) {
            ev.push((i, rng.gen_range(0..card)));
        }
    }
    ev
}

pub fn to_evidence(ev: &[(usize, usize)]) -> Evidence {
    ev.iter()
        .map(|&(i, s)| (node_id(i), Observation::State(format!("s{s}"))))
        .collect()
}

impl RandomNet {
    pub fn joint(&self, states: &[usize]) -> f64 {
        (0..self.cards.len())
            .map(|i| {
                let config = self.parents[i].iter().fold(0, |c, &p| c * self.cards[p] + states[p]);
                self.tables[i][config][states[i]]
            })
            .product()
    }

    fn for_each_assignment(&self, mut f: impl FnMut(&[usize])) {
        let n = self.cards.len();
        let mut states = vec![0; n];
        loop {
            f(&states);
            let mut i = n;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                states[i] += 1;
                if states[i] < self.cards[i] {
                    break;
                }
                states[i] = 0;
            }
        }
    }

    /// Posterior marginals by enumeration, `None` when the evidence has
    /// probability zero.
    pub fn enumerate_marginals(&self, evidence: &[(usize, usize)]) -> Option<Vec<Vec<f64>>> {
        let mut marg: Vec<Vec<f64>> = self.cards.iter().map(|&c| vec![0.0; c]).collect();
        let mut total = 0.0;
        self.for_each_assignment(|s| {
            if evidence.iter().all(|&(i, v)| s[i] == v) {
                let p = self.joint(s);
                total += p;
                for (i, &si) in s.iter().enumerate() {
                    marg[i][si] += p;
                }
            }
        });
        if total == 0.0 {
            return None;
        }
        for m in &mut marg {
            for p in m.iter_mut() {
                *p /= total;
            }
        }
        Some(marg)
    }

    /// Maximal joint probability consistent with the evidence and every
    /// assignment attaining it (compared with a relative tolerance).
    pub fn enumerate_mpe(&self, evidence: &[(usize, usize)]) -> (f64, Vec<Vec<usize>>) {
        let mut best = 0.0;
        let mut all: Vec<(f64, Vec<usize>)> = Vec::new();
        self.for_each_assignment(|s| {
            if evidence.iter().all(|&(i, v)| s[i] == v) {
                let p = self.joint(s);
                if p > 0.0 && p >= best * (1.0 - 1e-12) {
                    best = best.max(p);
                    all.push((p, s.to_vec()));
                }
            }
        });
        let argmax = all
            .into_iter()
            .filter(|(p, _)| *p >= best * (1.0 - 1e-12))
            .map(|(_, s)| s)
            .collect();
        (best, argmax)
    }
}

/// The two-parent field-failure example: testing effort {low, high} and
/// code complexity {low, medium, high} drive failures {<100, >100}.
pub fn field_failures_network() -> BayesianNetwork {
    let ranked = |states: &[&str]| NodeKind::Ranked {
        states: states.iter().map(|s| s.to_string()).collect(),
        midpoints: (0..states.len())
            .map(|i| (i as f64 + 0.5) / states.len() as f64)
            .collect(),
    };
    let root = |id: &str, states: &[&str]| NodeSpec {
        id: id.into(),
        name: String::new(),
        group: None,
        kind: ranked(states),
        expression: Expression::Uniform,
    };
    BayesianNetwork {
        nodes: vec![
            root("testing_effort", &["low", "high"]),
            root("code_complexity", &["low", "medium", "high"]),
            NodeSpec {
                id: "field_failures".into(),
                name: "Number of Field Failures".into(),
                group: None,
                kind: ranked(&["<100", ">100"]),
                expression: Expression::ExplicitCpt {
                    parents: vec!["testing_effort".into(), "code_complexity".into()],
                    columns: vec![
                        vec![0.4, 0.6],
                        vec![0.3, 0.7],
                        vec![0.2, 0.8],
                        vec![0.6, 0.4],
                        vec![0.55, 0.45],
                        vec![0.5, 0.5],
                    ],
                },
            },
        ],
    }
}
