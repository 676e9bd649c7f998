//! Relational message-passing networks used as neural predicates.

mod config;
mod graph;
mod net;
mod params;
mod tensor;
mod wl;

pub use config::{GnnConfig, Readout};
pub use graph::LabelledGraph;
pub use net::{
    backward, backward_embed, backward_readout, embed, encode_features, forward, readout, sigmoid,
    softmax, Embedding, GraphInput, ReadoutTrace, Trace,
};
pub use params::{
    snapshot_from_json, snapshot_to_json, LayerParams, ParamTensors, ReadoutParams, Snapshot,
};
pub use tensor::Matrix;
pub use wl::{wl1_histogram, wl1_refine};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GnnError {
    #[error("vertex label `{0}` is not known to the model")]
    UnknownLabel(String),
    #[error("edge label `{0}` is not known to the model")]
    UnknownRelation(String),
    #[error("target `{0}` is not a vertex of the graph")]
    MissingTarget(String),
    #[error("readout expects {expected} target(s), got {got}")]
    TargetCount { expected: usize, got: usize },
    #[error("gradient shape does not match the parameters")]
    ShapeMismatch,
    #[error("bad parameter snapshot: {0}")]
    Snapshot(String),
}

#[cfg(test)]
mod tests;
