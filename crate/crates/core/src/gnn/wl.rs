use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use super::graph::LabelledGraph;

/// 1-WL colour refinement over in-neighbours, keyed on (edge label,
/// neighbour colour) multisets. Runs exactly `min(rounds, |V|)` rounds so
/// colour histograms of equal-size graphs stay comparable.
pub fn wl1_refine(g: &LabelledGraph, rounds: usize) -> Vec<u64> {
    let n = g.len();
    let mut colours: Vec<u64> = (0..n).map(|v| hash_of(&g.labels(v))).collect();
    let mut incoming: Vec<Vec<(&str, usize)>> = vec![Vec::new(); n];
    for (u, l, v) in g.edges() {
        incoming[v].push((l, u));
    }
    for _ in 0..rounds.min(n) {
        colours = (0..n)
            .map(|v| {
                let mut msgs: Vec<(&str, u64)> =
                    incoming[v].iter().map(|&(l, u)| (l, colours[u])).collect();
                msgs.sort_unstable();
                hash_of(&(colours[v], msgs))
            })
            .collect();
    }
    colours
}

/// Colour multiset after refinement.
pub fn wl1_histogram(g: &LabelledGraph, rounds: usize) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for c in wl1_refine(g, rounds) {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

fn hash_of<T: Hash>(x: &T) -> u64 {
    let mut s = DefaultHasher::new();
    x.hash(&mut s);
    s.finish()
}
