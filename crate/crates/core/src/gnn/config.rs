use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    /// One target vertex.
    Node,
    /// Two target vertices, embeddings concatenated.
    Edge,
    /// No targets; mean over all vertices.
    Graph,
}

impl Readout {
    pub fn target_count(self) -> usize {
        match self {
            Readout::Node => 1,
            Readout::Edge => 2,
            Readout::Graph => 0,
        }
    }
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readout::Node => "node",
            Readout::Edge => "edge",
            Readout::Graph => "graph",
        })
    }
}

/// Fixed architecture of one graph neural predicate's network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub model_id: String,
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Edge labels, one weight matrix per label and layer.
    pub relations: Vec<String>,
    /// Vertex labels, one multi-hot slot each.
    pub vertex_labels: Vec<String>,
    pub readout: Readout,
    /// 1 for a sigmoid output, k ≥ 2 for a softmax over a head group.
    pub output_arity: usize,
}

impl GnnConfig {
    pub fn input_dim(&self) -> usize {
        self.vertex_labels.len() + 1
    }

    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim()
        } else {
            self.hidden_dim
        }
    }

    pub fn readout_input_dim(&self) -> usize {
        match self.readout {
            Readout::Edge => 2 * self.hidden_dim,
            _ => self.hidden_dim,
        }
    }

    pub fn relation_index(&self, label: &str) -> Option<usize> {
        self.relations.iter().position(|r| r == label)
    }
}
