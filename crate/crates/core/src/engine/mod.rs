//! Possible-world inference over programs with graph neural facts.

mod compile;
mod ground;
mod infer;
mod world;

use serde::Serialize;

pub use compile::Engine;
pub use ground::{ground, ground_gnn_schemas, possible_atom_universe, stratify, GroundGnnFact, Grounding};
pub use infer::{EmbedCache, GraphKey, Gradient, PlanGrad, QueryPlan};
pub use world::{induced_graph, world_probability, NeuralFactor, WorldAssignment};

/// Default bound on enumerated base facts per query.
pub const DEFAULT_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferenceOptions {
    pub cap: usize,
    /// Reuse network evaluations across worlds with the same induced graph.
    pub cache: bool,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            cap: DEFAULT_CAP,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceResult {
    pub query: String,
    pub probability: f64,
    pub worlds_enumerated: u64,
    pub distinct_gnn_evaluations: u64,
    pub relevant_fact_count: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("query depends on {count} uncertain facts, above the enumeration cap of {cap}")]
    CapExceeded { count: usize, cap: usize },
    #[error("conditional probability undefined: evidence {evidence} has probability 0")]
    UndefinedConditional { evidence: String },
    #[error("graph neural facts depend on each other cyclically: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("{0} is defined more than once as a base fact")]
    DuplicateHead(String),
    #[error("graph neural fact head {0} is not ground after grounding")]
    NonGroundHead(String),
    #[error("query atom {0} is not ground")]
    NonGroundQuery(String),
    #[error("no parameters for model {0}")]
    MissingModel(String),
    #[error("no value for learnable fact {0}")]
    MissingFact(String),
    #[error(transparent)]
    Gnn(#[from] crate::gnn::GnnError),
}

#[cfg(test)]
mod tests;
