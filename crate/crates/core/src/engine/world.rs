use std::collections::{BTreeMap, BTreeSet};

use crate::dsl::ProbFact;
use crate::gnn::LabelledGraph;
use crate::logic::Atom;

use super::ground::GroundGnnFact;

/// Truth value of every base fact under consideration.
pub type WorldAssignment = BTreeMap<Atom, bool>;

/// A network's output for one ground neural fact in one world.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralFactor {
    pub heads: Vec<Atom>,
    /// One probability for a singleton head, a distribution for a group.
    pub output: Vec<f64>,
}

/// The graph a neural fact sees in a world: its fixed vertex set with the
/// graph-specification atoms true in `model` as labels and edges.
pub fn induced_graph(f: &GroundGnnFact, model: &BTreeSet<Atom>) -> LabelledGraph {
    let mut g = LabelledGraph::new(f.node_set.iter().cloned());
    for a in f.gamma.iter().filter(|a| model.contains(*a)) {
        match a.args.as_slice() {
            [x] => {
                g.add_label(&x.to_string(), a.predicate.clone());
            }
            [x, y] => {
                g.add_edge(&x.to_string(), a.predicate.clone(), &y.to_string());
            }
            _ => {}
        }
    }
    g
}

/// Product of per-fact factors: p or 1 − p for probabilistic facts and
/// singleton neural heads, the chosen member's probability for head groups.
/// A group without exactly one true member has weight 0.
pub fn world_probability(w: &WorldAssignment, facts: &[ProbFact], neural: &[NeuralFactor]) -> f64 {
    let holds = |a: &Atom| w.get(a).copied().unwrap_or(false);
    let mut p = 1.0;
    for f in facts {
        p *= if holds(&f.atom) { f.prob } else { 1.0 - f.prob };
    }
    for n in neural {
        if n.heads.len() == 1 {
            p *= if holds(&n.heads[0]) { n.output[0] } else { 1.0 - n.output[0] };
        } else {
            let on: Vec<usize> = (0..n.heads.len()).filter(|&i| holds(&n.heads[i])).collect();
            p *= match on.as_slice() {
                [i] => n.output[*i],
                _ => 0.0,
            };
        }
    }
    p
}
