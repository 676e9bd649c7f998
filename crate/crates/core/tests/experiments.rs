//! Generated datasets checked against independent reimplementations of
//! their labels, plus split hygiene and metric sanity.

use std::collections::{BTreeSet, HashMap};

use dgl_core::dsl::load;
use dgl_core::engine::{Engine, InferenceOptions};
use dgl_core::experiments::graphs::SimpleGraph;
use dgl_core::experiments::*;
use dgl_core::train::ParamStore;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(exp: Experiment, seed: u64, train: usize, test: usize) -> DatasetSpec {
    let mut s = DatasetSpec::new(exp, seed);
    s.train = train;
    s.test = test;
    s
}

fn adjacency(g: &SimpleGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.n];
    for &(u, v) in &g.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

/// Simple cycle of exactly `len` vertices, by depth-first path extension
/// from each start vertex.
fn dfs_cycle(g: &SimpleGraph, len: usize) -> bool {
    fn extend(adj: &[Vec<usize>], path: &mut Vec<usize>, len: usize) -> bool {
        let last = *path.last().unwrap();
        if path.len() == len {
            return adj[last].contains(&path[0]);
        }
        for &w in &adj[last] {
            if !path.contains(&w) {
                path.push(w);
                if extend(adj, path, len) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let adj = adjacency(g);
    (0..g.n).any(|s| extend(&adj, &mut vec![s], len))
}

fn dfs_clique4(g: &SimpleGraph) -> bool {
    let adj = adjacency(g);
    let linked = |a: usize, b: usize| adj[a].contains(&b);
    (0..g.n).any(|a| {
        adj[a].iter().any(|&b| {
            adj[a].iter().any(|&c| {
                adj[a]
                    .iter()
                    .any(|&d| b < c && c < d && linked(b, c) && linked(b, d) && linked(c, d))
            })
        })
    })
}

fn dfs_class(g: &SimpleGraph) -> usize {
    if dfs_cycle(g, 4) {
        0
    } else if dfs_cycle(g, 3) {
        1
    } else {
        2
    }
}

#[test]
fn e1_labels_match_cycle_search() {
    for seed in 0..3 {
        let d = gen_e1(&small(Experiment::E1, seed, 60, 30));
        for g in &d.graphs {
            assert_eq!(g.class, dfs_class(&g.graph), "{}", g.id);
            let has4 = d.top.contains(&format!("has({},cycle_4).", g.id));
            assert_eq!(has4, dfs_cycle(&g.graph, 4), "{}", g.id);
            let ind4 = d.bottom.contains(&format!("ind_cycle_4({}_g).", g.id));
            assert_eq!(ind4, dfs_cycle(&g.graph, 4), "{}", g.id);
        }
    }
}

#[test]
fn e2_template_facts_match_cycle_search() {
    for seed in 0..3 {
        let d = gen_e2(&small(Experiment::E2, seed, 90, 30));
        let mut per_class = [0usize; 3];
        for g in &d.graphs {
            assert!((6..=10).contains(&g.graph.n));
            assert_eq!(g.class, dfs_class(&g.graph), "{}", g.id);
            per_class[g.class] += 1;
            for (tpl, truth) in [
                ("cycle_3", dfs_cycle(&g.graph, 3)),
                ("cycle_4", dfs_cycle(&g.graph, 4)),
                ("clique_4", dfs_clique4(&g.graph)),
            ] {
                let fact = format!("has({},{tpl}).", g.id);
                assert_eq!(d.program.contains(&fact), truth, "{fact}");
            }
        }
        assert_eq!(per_class, [40, 40, 40]);
    }
}

/// grandfather = (male ∧ parent) ∘ parent, as boolean matrices.
fn kinship_closure(f: &Family) -> Vec<Vec<bool>> {
    let n = f.persons.len();
    let mut parent = vec![vec![false; n]; n];
    for &(x, y) in &f.parent_of {
        parent[x][y] = true;
    }
    let mut gf = vec![vec![false; n]; n];
    for x in 0..n {
        for y in 0..n {
            gf[x][y] = f.persons[x].male && (0..n).any(|z| parent[x][z] && parent[z][y]);
        }
    }
    gf
}

#[test]
fn e3_supervision_matches_kinship_closure() {
    for seed in 0..3 {
        let d = gen_e3(&small(Experiment::E3, seed, 12, 4));
        let mut who: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut closures = Vec::new();
        for (fi, f) in d.families.iter().enumerate() {
            assert!(f.persons.len() <= 12);
            for (pi, p) in f.persons.iter().enumerate() {
                who.insert(&p.name, (fi, pi));
            }
            // every child has one father and one mother
            for c in 0..f.persons.len() {
                let parents: Vec<usize> = f.parent_of.iter().filter(|e| e.1 == c).map(|e| e.0).collect();
                assert!(parents.is_empty() || parents.len() == 2);
                if parents.len() == 2 {
                    assert_ne!(f.persons[parents[0]].male, f.persons[parents[1]].male);
                }
            }
            for &(x, y) in &f.parent_of {
                let fact = format!("pOf({},{}).", f.persons[x].name, f.persons[y].name);
                assert!(d.program.contains(&fact));
            }
            closures.push(kinship_closure(f));
        }
        let mut positives = 0;
        for ex in &d.train {
            let names: Vec<String> = ex.query.args.iter().map(|t| t.to_string()).collect();
            let (fx, x) = who[names[0].as_str()];
            let (fy, y) = who[names[1].as_str()];
            assert_eq!(fx, fy, "pairs stay within a family");
            assert_eq!(d.families[fx].split, Split::Train);
            assert_eq!(ex.target == 1.0, closures[fx][x][y], "{}", ex.query);
            positives += usize::from(ex.target == 1.0);
        }
        let all: usize = closures
            .iter()
            .zip(&d.families)
            .filter(|(_, f)| f.split == Split::Train)
            .map(|(c, _)| c.iter().flatten().filter(|b| **b).count())
            .sum();
        assert_eq!(positives, all, "every grandfather pair is a positive");
    }
}

/// Towers as bottom-to-top stacks; tries every move of one top block onto
/// the top of another stack.
fn stack_search(inst: &BlocksInstance, glass_ok: bool) -> bool {
    let n = inst.materials.len();
    let mut stacks: Vec<Vec<usize>> = Vec::new();
    for b in (0..n).filter(|&b| inst.below[b].is_none()) {
        let mut s = vec![b];
        while let Some(up) = (0..n).find(|&u| inst.below[u] == Some(*s.last().unwrap())) {
            s.push(up);
        }
        stacks.push(s);
    }
    assert_eq!(stacks.iter().map(Vec::len).sum::<usize>(), n);
    for a in 0..stacks.len() {
        for b in 0..stacks.len() {
            if a == b {
                continue;
            }
            let dest = *stacks[b].last().unwrap();
            if !glass_ok && inst.materials[dest] == Material::Glass {
                continue;
            }
            let mut next = stacks.clone();
            let moved = next[a].pop().unwrap();
            next[b].push(moved);
            if next
                .iter()
                .any(|s| s.len() >= 2 && inst.materials[*s.last().unwrap()] == Material::Glass)
            {
                return true;
            }
        }
    }
    false
}

#[test]
fn e4_labels_match_stack_search() {
    for seed in 0..3 {
        let d = gen_e4(&small(Experiment::E4, seed, 40, 80));
        for inst in &d.instances {
            assert_eq!(one_move_tower(inst), stack_search(inst, false), "{}", inst.id);
            let trap = !stack_search(inst, false) && stack_search(inst, true);
            assert_eq!(is_trap(inst), trap, "{}", inst.id);
            if inst.split == Split::Train {
                assert!(!trap, "{} is a trap in the training split", inst.id);
            }
        }
        let test = d.examples(Split::Test);
        let insts: Vec<_> = d.instances.iter().filter(|i| i.split == Split::Test).collect();
        for (ex, inst) in test.iter().zip(insts) {
            assert_eq!(ex.query, inst.query());
            assert_eq!(ex.target == 1.0, stack_search(inst, false));
        }
    }
}

#[test]
fn splits_are_disjoint() {
    for seed in 0..3 {
        let split_ids = |items: Vec<(String, Split)>| {
            let train: BTreeSet<String> = items.iter().filter(|i| i.1 == Split::Train).map(|i| i.0.clone()).collect();
            let test: BTreeSet<String> = items.iter().filter(|i| i.1 == Split::Test).map(|i| i.0.clone()).collect();
            assert!(!train.is_empty() && !test.is_empty());
            assert!(train.is_disjoint(&test));
        };
        let e1 = gen_e1(&small(Experiment::E1, seed, 12, 6));
        split_ids(e1.graphs.iter().map(|g| (g.id.clone(), g.split)).collect());
        let e2 = gen_e2(&small(Experiment::E2, seed, 12, 6));
        split_ids(e2.graphs.iter().map(|g| (g.id.clone(), g.split)).collect());
        let e3 = gen_e3(&small(Experiment::E3, seed, 4, 2));
        split_ids(
            e3.families
                .iter()
                .flat_map(|f| f.persons.iter().map(move |p| (p.name.clone(), f.split)))
                .collect(),
        );
        let e4 = gen_e4(&small(Experiment::E4, seed, 8, 8));
        split_ids(e4.instances.iter().map(|i| (i.id.clone(), i.split)).collect());
    }
}

#[test]
fn shuffled_scores_give_chance_auc() {
    let truth: Vec<bool> = (0..100).map(|i| i < 50).collect();
    let mut scores: Vec<f64> = (0..100).map(|i| 1.0 - i as f64 / 100.0).collect();
    assert_eq!(auc(&scores, &truth), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0.0;
    for _ in 0..50 {
        scores.shuffle(&mut rng);
        total += auc(&scores, &truth);
    }
    let mean = total / 50.0;
    assert!((mean - 0.5).abs() <= 0.1, "mean shuffled AUC {mean}");
}

#[test]
fn single_repetition_aggregate_equals_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let reports = run_experiment(Experiment::E4, 3, 1, dir.path()).unwrap();
    assert_eq!(reports.len(), 1);
    let base = dir.path().join("runs").join("e4");
    let metrics = std::fs::read_to_string(base.join("3").join("metrics.csv")).unwrap();
    let aggregate = std::fs::read_to_string(base.join("aggregate.csv")).unwrap();
    let mut rows = aggregate.lines();
    assert_eq!(rows.next(), Some("metric,mean,stddev,n"));
    for (m, a) in metrics.lines().skip(1).zip(rows) {
        let (name, value) = m.split_once(',').unwrap();
        assert_eq!(a, format!("{name},{value},0,1"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// No trained or untrained weights can make the constrained pipeline
    /// call an instance without a non-glass destination solvable.
    #[test]
    fn pipeline_rejects_glass_only_destinations(data_seed in 0u64..1000, weight_seed in any::<u64>()) {
        let d = gen_e4(&small(Experiment::E4, data_seed, 0, 48));
        let p = load(&d.pipeline).unwrap();
        let e = Engine::new(&p).unwrap();
        let store = ParamStore::init(&p, weight_seed);
        let stuck: Vec<_> = d.instances.iter().filter(|i| i.no_legal_destination()).collect();
        prop_assert!(!stuck.is_empty());
        for inst in stuck {
            let r = e.marginal(&inst.query(), &store, &InferenceOptions::default()).unwrap();
            prop_assert_eq!(r.probability, 0.0);
        }
    }
}
