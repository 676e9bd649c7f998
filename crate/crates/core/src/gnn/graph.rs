use std::collections::BTreeSet;

/// Directed multi-relational graph with multi-label vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LabelledGraph {
    vertices: Vec<String>,
    labels: Vec<BTreeSet<String>>,
    edges: BTreeSet<(usize, String, usize)>,
}

impl LabelledGraph {
    pub fn new<I, S>(vertices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let labels = vec![BTreeSet::new(); vertices.len()];
        LabelledGraph {
            vertices,
            labels,
            edges: BTreeSet::new(),
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: &str) -> Option<usize> {
        self.vertices.iter().position(|x| x == v)
    }

    pub fn labels(&self, v: usize) -> &BTreeSet<String> {
        &self.labels[v]
    }

    /// Edges as (source, label, target) vertex indices.
    pub fn edges(&self) -> impl Iterator<Item = (usize, &str, usize)> {
        self.edges.iter().map(|(u, l, v)| (*u, l.as_str(), *v))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Adds a label; returns false when `v` is not a vertex.
    pub fn add_label(&mut self, v: &str, label: impl Into<String>) -> bool {
        match self.index_of(v) {
            Some(i) => {
                self.labels[i].insert(label.into());
                true
            }
            None => false,
        }
    }

    pub fn add_label_at(&mut self, v: usize, label: impl Into<String>) {
        self.labels[v].insert(label.into());
    }

    /// Adds `u -label-> v`; returns false when an endpoint is missing.
    pub fn add_edge(&mut self, u: &str, label: impl Into<String>, v: &str) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(a), Some(b)) => {
                self.edges.insert((a, label.into(), b));
                true
            }
            _ => false,
        }
    }

    pub fn add_edge_at(&mut self, u: usize, label: impl Into<String>, v: usize) {
        self.edges.insert((u, label.into(), v));
    }

    /// Adds both directions of an undirected edge.
    pub fn add_undirected(&mut self, u: &str, label: &str, v: &str) -> bool {
        self.add_edge(u, label, v) && self.add_edge(v, label, u)
    }

    /// Same graph with vertices reordered: new vertex `i` is old vertex `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> LabelledGraph {
        let mut inv = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        LabelledGraph {
            vertices: order.iter().map(|&o| self.vertices[o].clone()).collect(),
            labels: order.iter().map(|&o| self.labels[o].clone()).collect(),
            edges: self
                .edges
                .iter()
                .map(|(u, l, v)| (inv[*u], l.clone(), inv[*v]))
                .collect(),
        }
    }
}
