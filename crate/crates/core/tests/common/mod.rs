//! Random small programs and an exhaustive all-facts oracle.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dgl_core::dsl::{CheckedProgram, ProbFact};
use dgl_core::engine::{ground, induced_graph, world_probability, NeuralFactor, WorldAssignment};
use dgl_core::gnn::forward;
use dgl_core::logic::{minimal_model, Atom};
use dgl_core::train::ParamStore;
use rand::seq::SliceRandom;
use rand::Rng;

const NODES: [&str; 4] = ["a", "b", "c", "d"];

/// A program with at most 10 base facts, 6 rules and 2 graph neural facts
/// over at most 5-vertex graphs. The second neural fact, when present, is a
/// two-way head group reading a predicate derived from the first.
pub fn random_program<R: Rng>(rng: &mut R) -> String {
    let mut src = String::new();
    let n_gnn = rng.gen_range(0..=2);
    let n_heads = match n_gnn {
        0 => 0,
        1 => 1,
        _ => 3,
    };
    let mut candidates: Vec<String> = Vec::new();
    for u in NODES {
        candidates.push(format!("l({u})"));
        for v in NODES {
            if u != v {
                candidates.push(format!("e({u},{v})"));
            }
        }
    }
    candidates.shuffle(rng);
    let n_facts = rng.gen_range(2..=10 - n_heads);
    for atom in candidates.iter().take(n_facts) {
        match rng.gen_range(0..10) {
            0 => src.push_str(&format!("{atom}.\n")),
            1 => src.push_str(&format!("t({:.3})::{atom}.\n", rng.gen_range(0.05..0.95))),
            _ => src.push_str(&format!("{:.3}::{atom}.\n", rng.gen_range(0.05..0.95))),
        }
    }
    let mut pool = vec![
        "p(X) :- e(X,Y).",
        "p(X) :- l(X).",
        "r(X,Y) :- e(X,Y).",
        "r(X,Z) :- e(X,Y), r(Y,Z).",
        "q :- r(a,X), l(X).",
        "q :- p(b), p(c).",
        "s(X) :- p(X), l(X).",
    ];
    if n_gnn >= 1 {
        let gamma = if rng.gen_bool(0.5) { "[e/2, l/1]" } else { "[e/2, p/1]" };
        src.push_str("#model(m1, layers=2, hidden=3, readout=node).\n");
        src.push_str(&format!("gnn(m1, {gamma}, [a])::g(a).\n"));
        pool.extend(["t(X) :- g(X).", "q :- g(a), p(b).", "t(X) :- g(a), l(X)."]);
    }
    if n_gnn == 2 {
        src.push_str("#model(m2, layers=1, hidden=2, readout=graph).\n");
        src.push_str("gnn(m2, [e/2, t/1])::k1; k2.\n");
        pool.extend(["q :- k1.", "u :- k2, p(a)."]);
    }
    pool.shuffle(rng);
    let n_rules = rng.gen_range(1..=6);
    for r in pool.iter().take(n_rules) {
        src.push_str(r);
        src.push('\n');
    }
    src
}

/// Candidate query atoms of a generated program.
pub fn query_atoms(p: &CheckedProgram) -> Vec<Atom> {
    let g = ground(p).unwrap();
    let mut qs: Vec<Atom> = g.universe.atoms().iter().cloned().collect();
    qs.push(Atom::ground("q", &[]));
    qs.push(Atom::ground("absent", &["z"]));
    qs
}

/// Enumerates all assignments to every base fact (probabilistic facts and
/// every neural head individually), recomputes the least model and the
/// networks' outputs on each induced graph, and sums world weights.
pub fn brute_force(p: &CheckedProgram, store: &ParamStore, q: &Atom, evidence: Option<&Atom>) -> (f64, f64) {
    let g = ground(p).unwrap();
    let facts: Vec<ProbFact> = p
        .prob_facts
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if let Some(id) = &f.param_id {
                f.prob = store.prob(id).unwrap();
            }
            f
        })
        .collect();
    let mut base: Vec<Atom> = facts.iter().map(|f| f.atom.clone()).collect();
    for nf in &g.gnn_facts {
        base.extend(nf.head_group.iter().cloned());
    }
    assert!(base.len() <= 16);
    let mut joint = 0.0;
    let mut ev = 0.0;
    for mask in 0u32..(1 << base.len()) {
        let w: WorldAssignment = base
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), mask & (1 << i) != 0))
            .collect();
        let true_facts: BTreeSet<Atom> = w.iter().filter(|(_, t)| **t).map(|(a, _)| a.clone()).collect();
        let model = minimal_model(&true_facts, &g.rules);
        let neural: Vec<NeuralFactor> = g
            .gnn_facts
            .iter()
            .map(|nf| {
                let cfg = &p.configs[&nf.model_id];
                let graph = induced_graph(nf, &model);
                let targets: Vec<&str> = nf.targets.iter().map(String::as_str).collect();
                let (output, _) = forward(cfg, &store.models[&nf.model_id], &graph, &targets).unwrap();
                NeuralFactor {
                    heads: nf.head_group.clone(),
                    output,
                }
            })
            .collect();
        let weight = world_probability(&w, &facts, &neural);
        let e_true = evidence.is_none_or(|e| model.contains(e));
        if e_true {
            ev += weight;
            if model.contains(q) {
                joint += weight;
            }
        }
    }
    (joint, ev)
}
