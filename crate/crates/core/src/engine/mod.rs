//! Distributions, table compilation and exact inference.

pub mod compile;
pub mod dist;
pub mod factor;
pub mod infer;
pub mod network;

pub use compile::{compile, CompiledNetwork, CompiledNode};
pub use dist::{discretize, tnormal_moments, Distribution, Moments};
pub use infer::{infer, infer_node, mpe, summarize, Explanation, NodePosterior, Posterior, Summary};
pub use network::{
    BayesianNetwork, Evidence, Expression, NodeGroup, NodeKind, NodeSpec, Observation,
    PartitionEntry, Sign, WeightedParent,
};
