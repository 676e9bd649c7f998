//! Cycle-classification graphs (E1) and template structure learning (E2).

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use super::graphs::{cycle_class, wl_pair, sample_class, templates, SimpleGraph};
use super::{atom, DatasetSpec, Split};
use crate::logic::Atom;
use crate::train::TrainingExample;

pub const CLASSES: [&str; 3] = ["class_0", "class_1", "class_2"];
pub const TEMPLATES: [&str; 3] = ["cycle_3", "cycle_4", "clique_4"];

#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    pub id: String,
    pub graph: SimpleGraph,
    pub class: usize,
    pub split: Split,
}

impl GraphInstance {
    pub fn vertex(&self, i: usize) -> String {
        format!("{}_{i}", self.id)
    }

    /// Classification queries, one per class, with 0/1 targets.
    pub fn examples(&self) -> Vec<TrainingExample> {
        CLASSES
            .iter()
            .enumerate()
            .map(|(k, c)| TrainingExample::new(atom("classify", &[&self.id, c]), f64::from(u8::from(k == self.class))))
            .collect()
    }

    pub fn queries(&self) -> Vec<Atom> {
        CLASSES.iter().map(|c| atom("classify", &[&self.id, c])).collect()
    }
}

/// Draws `spec.train + spec.test` graphs with 6 to 10 vertices and
/// balanced classes; a third of class-0 graphs carry a 4-clique.
fn sample_graphs(spec: &DatasetSpec) -> Vec<GraphInstance> {
    let mut rng = spec.rng(0);
    let total = spec.train + spec.test;
    let mut classes: Vec<usize> = (0..total).map(|i| i % 3).collect();
    classes.shuffle(&mut rng);
    classes
        .into_iter()
        .enumerate()
        .map(|(i, class)| {
            let n = rng.gen_range(6..=10);
            let clique = class == 0 && rng.gen_bool(1.0 / 3.0);
            let graph = sample_class(&mut rng, n, class, clique);
            GraphInstance {
                id: format!("g{i}"),
                class: cycle_class(&graph),
                graph,
                split: if i < spec.train { Split::Train } else { Split::Test },
            }
        })
        .collect()
}

/// Vertex and edge facts plus the classifier's head group over the graph.
fn write_graph(out: &mut String, g: &GraphInstance, augment: bool) {
    let mut gamma: Vec<String> = Vec::new();
    for v in 0..g.graph.n {
        gamma.push(format!("v({})", g.vertex(v)));
    }
    for &(u, v) in &g.graph.edges {
        gamma.push(format!("e({},{})", g.vertex(u), g.vertex(v)));
        gamma.push(format!("e({},{})", g.vertex(v), g.vertex(u)));
    }
    if augment {
        let hub = format!("{}_g", g.id);
        gamma.push(format!("hub({hub})"));
        if g.graph.has_four_cycle() {
            gamma.push(format!("ind_cycle_4({hub})"));
        }
        if g.graph.has_triangle() {
            gamma.push(format!("ind_cycle_3({hub})"));
        }
        for v in 0..g.graph.n {
            gamma.push(format!("e({hub},{})", g.vertex(v)));
            gamma.push(format!("e({},{hub})", g.vertex(v)));
        }
    }
    for a in &gamma {
        let _ = writeln!(out, "{a}.");
    }
    let heads: Vec<String> = CLASSES.iter().map(|c| format!("gnn_classifier({},{c})", g.id)).collect();
    let _ = writeln!(out, "gnn(m_cls, [{}])::{}.", gamma.join(", "), heads.join("; "));
}

fn header(spec: &DatasetSpec) -> String {
    format!(
        "#model(m_cls, layers=3, hidden={}, readout=graph).\nclassify(G,C) :- gnn_classifier(G,C).\n",
        spec.hidden
    )
}

pub struct E1Data {
    pub graphs: Vec<GraphInstance>,
    /// Rule for class 0 over detector facts, network for the rest.
    pub top: String,
    /// Network alone on graphs with a structure-indicator hub vertex.
    pub bottom: String,
    /// Network alone on the plain graphs.
    pub plain: String,
}

/// Graphs labelled by cycle structure, with the 1-WL-equivalent pair
/// prepended to the training split as `wl_g0` and `wl_g1`.
pub fn gen_e1(spec: &DatasetSpec) -> E1Data {
    let (g0, g1) = wl_pair();
    let mut graphs = vec![
        GraphInstance {
            id: "wl_g0".into(),
            class: cycle_class(&g0),
            graph: g0,
            split: Split::Train,
        },
        GraphInstance {
            id: "wl_g1".into(),
            class: cycle_class(&g1),
            graph: g1,
            split: Split::Train,
        },
    ];
    graphs.extend(sample_graphs(spec));
    let mut top = header(spec);
    top.push_str("classify(G,class_0) :- has(G,cycle_4).\n");
    let mut bottom = header(spec);
    let mut plain = header(spec);
    for g in &graphs {
        write_graph(&mut top, g, false);
        if g.graph.has_four_cycle() {
            let _ = writeln!(top, "has({},cycle_4).", g.id);
        }
        write_graph(&mut bottom, g, true);
        write_graph(&mut plain, g, false);
    }
    E1Data {
        graphs,
        top,
        bottom,
        plain,
    }
}

pub struct E2Data {
    pub graphs: Vec<GraphInstance>,
    pub program: String,
}

/// Graphs with detector facts for every template present, one learnable
/// `rF(template, class)` fact per pair, and a classify rule per source.
pub fn gen_e2(spec: &DatasetSpec) -> E2Data {
    let graphs = sample_graphs(spec);
    let mut program = header(spec);
    program.push_str("classify(G,C) :- has(G,T), rF(T,C).\n");
    for t in TEMPLATES {
        for c in CLASSES {
            let _ = writeln!(program, "t(0.5)::rF({t},{c}).");
        }
    }
    for g in &graphs {
        write_graph(&mut program, g, false);
        for t in templates(&g.graph) {
            let _ = writeln!(program, "has({},{t}).", g.id);
        }
    }
    E2Data { graphs, program }
}

/// Index of the highest score; the first wins ties.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}
