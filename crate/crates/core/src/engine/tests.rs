use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::dsl::{load, parse_atom, ProbFact};
use crate::logic::Atom;
use crate::train::ParamStore;

const BLOCKS: &str = "
0.7::on(a,b). 0.4::next_to(a,c). 0.5::light(a).
move(X) :- on(X,Y). move(X) :- next_to(X,Y).
legal_move(X) :- move(X), light(X).
";

const NEURAL_BLOCKS: &str = "
#model(m_move, layers=2, hidden=4, readout=node).
0.7::on(a,b). 0.4::next_to(a,c). 0.5::light(a).
gnn(m_move,[on(a,b),next_to(a,c)],[a])::move(a).
legal_move(X) :- move(X), light(X).
";

fn atom(s: &str) -> Atom {
    parse_atom(s).unwrap()
}

fn setup(src: &str) -> (Engine, ParamStore) {
    let p = load(src).unwrap();
    (Engine::new(&p).unwrap(), ParamStore::init(&p, 7))
}

fn prob(e: &Engine, s: &ParamStore, q: &str) -> f64 {
    e.marginal(&atom(q), s, &InferenceOptions::default()).unwrap().probability
}

#[test]
fn worked_world_probability() {
    let facts = vec![
        ProbFact::fixed(atom("on(a,b)"), 0.7),
        ProbFact::fixed(atom("next_to(a,c)"), 0.4),
        ProbFact::fixed(atom("light(a)"), 0.5),
    ];
    let w: WorldAssignment = [
        (atom("on(a,b)"), true),
        (atom("next_to(a,c)"), false),
        (atom("light(a)"), true),
    ]
    .into_iter()
    .collect();
    assert!((world_probability(&w, &facts, &[]) - 0.21).abs() < 1e-15);
    let certain = vec![ProbFact::fixed(atom("x"), 1.0)];
    let w: WorldAssignment = [(atom("x"), true)].into_iter().collect();
    assert_eq!(world_probability(&w, &certain, &[]), 1.0);
    let n = NeuralFactor {
        heads: vec![atom("g")],
        output: vec![0.5],
    };
    let w: WorldAssignment = [(atom("g"), true)].into_iter().collect();
    assert_eq!(world_probability(&w, &[], &[n]), 0.5);
}

#[test]
fn problog_marginals() {
    let (e, s) = setup(BLOCKS);
    // 8-world enumeration by hand
    let mut mv = 0.0;
    let mut lm = 0.0;
    for mask in 0..8u32 {
        let on = mask & 1 != 0;
        let nt = mask & 2 != 0;
        let li = mask & 4 != 0;
        let w = (if on { 0.7 } else { 0.3 }) * (if nt { 0.4 } else { 0.6 }) * 0.5;
        if on || nt {
            mv += w;
            if li {
                lm += w;
            }
        }
    }
    assert!((prob(&e, &s, "move(a)") - mv).abs() < 1e-12);
    assert!((prob(&e, &s, "legal_move(a)") - lm).abs() < 1e-12);
    assert!((mv - 0.82).abs() < 1e-12 && (lm - 0.41).abs() < 1e-12);
}

#[test]
fn conditionals() {
    let (e, s) = setup(BLOCKS);
    let o = InferenceOptions::default();
    let r = e.conditional(&atom("move(a)"), &atom("legal_move(a)"), &s, &o).unwrap();
    assert_eq!(r.probability, 1.0);
    let r = e.conditional(&atom("legal_move(a)"), &atom("light(a)"), &s, &o).unwrap();
    assert!((r.probability - 0.82).abs() < 1e-12);
    let (e, s) = setup("0.0::z. 0.5::y. w :- z.");
    let err = e.conditional(&atom("y"), &atom("w"), &s, &o).unwrap_err();
    assert!(matches!(err, EngineError::UndefinedConditional { .. }));
}

#[test]
fn deterministic_and_unknown_queries() {
    let (e, s) = setup("on(a,b). 0.5::x. y :- on(a,b).");
    assert_eq!(prob(&e, &s, "on(a,b)"), 1.0);
    assert_eq!(prob(&e, &s, "y"), 1.0);
    assert_eq!(prob(&e, &s, "nothing(here)"), 0.0);
}

#[test]
fn universe_contents() {
    let p = load(BLOCKS).unwrap();
    let u = possible_atom_universe(&p).unwrap();
    assert!(u.contains(&atom("move(a)")));
    assert!(u.contains(&atom("legal_move(a)")));
    let p = load("0.5::a. 0.2::b(c).").unwrap();
    assert_eq!(possible_atom_universe(&p).unwrap().len(), 2);
}

#[test]
fn ground_example_schema() {
    let p = load(NEURAL_BLOCKS).unwrap();
    let u = possible_atom_universe(&p).unwrap();
    let facts = ground_gnn_schemas(&p, &u).unwrap();
    assert_eq!(facts.len(), 1);
    let f = &facts[0];
    let nodes: Vec<&str> = f.node_set.iter().map(String::as_str).collect();
    assert_eq!(nodes, ["a", "b", "c"]);
    assert_eq!(f.targets, ["a"]);
    assert_eq!(f.head_group, [atom("move(a)")]);
}

#[test]
fn empty_indicator_gives_target_only_graph() {
    let p = load(
        "#model(m, layers=1, hidden=2, readout=node).
         gnn(m, [edge/2], [x])::h(x).",
    )
    .unwrap();
    let u = possible_atom_universe(&p).unwrap();
    let facts = ground_gnn_schemas(&p, &u).unwrap();
    assert!(facts[0].gamma.is_empty());
    assert_eq!(*facts[0].node_set, BTreeSet::from(["x".to_string()]));
}

#[test]
fn guarded_schema_grounds_per_solution() {
    let p = load(
        "#model(m, layers=1, hidden=2, readout=edge).
         pOf(a,b). pOf(a,c). pOf(b,d). m(a). f(b). m(c). f(d).
         gnn(m, [m/1, f/1, pOf/2], [X,Y])::fatherOf(X,Y) :- pOf(X,Y).",
    )
    .unwrap();
    let u = possible_atom_universe(&p).unwrap();
    let facts = ground_gnn_schemas(&p, &u).unwrap();
    assert_eq!(facts.len(), 3);
    let g = induced_graph(&facts[0], u.atoms());
    assert_eq!(g.len(), 4);
    assert_eq!(g.edge_count(), 3);
    assert!(g.labels(0).contains("m"));
}

#[test]
fn induced_graph_keeps_vertices() {
    let p = load(NEURAL_BLOCKS).unwrap();
    let e = Engine::new(&p).unwrap();
    let f = &e.gnn_facts()[0];
    let model: BTreeSet<Atom> = [atom("on(a,b)")].into_iter().collect();
    let g = induced_graph(f, &model);
    assert_eq!(g.vertices(), ["a", "b", "c"]);
    let edges: Vec<_> = g.edges().collect();
    assert_eq!(edges, [(0, "on", 1)]);
    let all: BTreeSet<Atom> = (*f.gamma).clone();
    assert_eq!(induced_graph(f, &all).edge_count(), 2);
}

#[test]
fn stratification_orders_layers() {
    let p = load(
        "#model(mv, layers=1, hidden=2, readout=edge).
         #model(tw, layers=1, hidden=2, readout=graph).
         on(a,b). glass(a). metal(b).
         gnn(tw, [on/2, after/2])::tower.
         gnn(mv, [on/2], [X,Y])::move(X,Y) :- on(X,Y).
         after(X,Y) :- move(X,Y), metal(Y).",
    )
    .unwrap();
    let e = Engine::new(&p).unwrap();
    let names: Vec<String> = e.order().iter().map(|&i| e.gnn_facts()[i].to_string()).collect();
    assert_eq!(names, ["move(a,b)", "tower"]);
}

#[test]
fn ground_cycle_is_reported() {
    let a = GroundGnnFact {
        model_id: "m".into(),
        gamma: Arc::new([atom("y(v)")].into_iter().collect()),
        node_set: Arc::new(["v".to_string()].into_iter().collect()),
        targets: vec!["v".into()],
        head_group: vec![atom("x(v)")],
    };
    let b = GroundGnnFact {
        gamma: Arc::new([atom("x(v)")].into_iter().collect()),
        head_group: vec![atom("y(v)")],
        ..a.clone()
    };
    assert!(matches!(stratify(&[a.clone(), b], &[]), Err(EngineError::Cycle(c)) if c.len() == 3));
    let indep = GroundGnnFact {
        gamma: Arc::new(BTreeSet::new()),
        head_group: vec![atom("z(v)")],
        ..a.clone()
    };
    assert_eq!(stratify(&[indep.clone(), indep], &[]).unwrap().len(), 2);
}

#[test]
fn cap_refusal_names_count() {
    let mut src = String::new();
    for i in 0..30 {
        src.push_str(&format!("0.5::f({i}). q :- f({i}).\n"));
    }
    let (e, s) = setup(&src);
    let err = e.marginal(&atom("q"), &s, &InferenceOptions::default()).unwrap_err();
    assert_eq!(err, EngineError::CapExceeded { count: 30, cap: 24 });
    let o = InferenceOptions { cap: 10, cache: true };
    let (e, s) = setup("0.5::a. 0.5::b. q :- a, b.");
    assert_eq!(e.marginal(&atom("q"), &s, &o).unwrap().probability, 0.25);
}

#[test]
fn neural_fact_probability_matches_network() {
    let (e, s) = setup(NEURAL_BLOCKS);
    let f = &e.gnn_facts()[0];
    let cfg = &e.configs()["m_move"];
    let params = &s.models["m_move"];
    let mut expected = 0.0;
    for mask in 0..4u32 {
        let on = mask & 1 != 0;
        let nt = mask & 2 != 0;
        let mut model = BTreeSet::new();
        if on {
            model.insert(atom("on(a,b)"));
        }
        if nt {
            model.insert(atom("next_to(a,c)"));
        }
        let g = induced_graph(f, &model);
        let out = crate::gnn::forward(cfg, params, &g, &["a"]).unwrap().0[0];
        expected += (if on { 0.7 } else { 0.3 }) * (if nt { 0.4 } else { 0.6 }) * out * 0.5;
    }
    let r = e.marginal(&atom("legal_move(a)"), &s, &InferenceOptions::default()).unwrap();
    assert!((r.probability - expected).abs() < 1e-12);
    assert_eq!(r.relevant_fact_count, 4);
    assert_eq!(r.worlds_enumerated, 16);
}

#[test]
fn cache_changes_counts_not_values() {
    let (e, s) = setup(&format!("{NEURAL_BLOCKS}\n0.6::bonus. legal_move(a) :- bonus."));
    let on = InferenceOptions::default();
    let off = InferenceOptions { cache: false, ..on };
    let a = e.marginal(&atom("legal_move(a)"), &s, &on).unwrap();
    let b = e.marginal(&atom("legal_move(a)"), &s, &off).unwrap();
    assert!((a.probability - b.probability).abs() <= 1e-12);
    assert_eq!(a.distinct_gnn_evaluations, 4);
    assert!(b.distinct_gnn_evaluations > a.distinct_gnn_evaluations);
}

#[test]
fn world_weights_sum_to_one() {
    let (e, s) = setup(NEURAL_BLOCKS);
    let plan = e.plan(&atom("legal_move(a)"), None, 24).unwrap();
    assert!((e.total_mass(&plan, &s).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn result_serializes_to_json() {
    let (e, s) = setup(BLOCKS);
    let r = e.marginal(&atom("legal_move(a)"), &s, &InferenceOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for k in ["query", "probability", "worlds_enumerated", "distinct_gnn_evaluations", "relevant_fact_count"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["query"], "legal_move(a)");
}

#[test]
fn recursive_paths_terminate() {
    let (e, s) = setup(
        "0.5::link(a,b). 0.5::link(b,c). 0.5::link(c,a).
         path(X,Y) :- link(X,Y). path(X,Z) :- link(X,Y), path(Y,Z).",
    );
    // a→c needs a→b→c or a→b... only route: link(a,b), link(b,c)
    assert!((prob(&e, &s, "path(a,c)") - 0.25).abs() < 1e-12);
}
