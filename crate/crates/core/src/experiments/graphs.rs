//! Small undirected graphs, structure detectors and planted-structure sampling.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    pub n: usize,
    /// Undirected edges stored as (min, max).
    pub edges: BTreeSet<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        SimpleGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = SimpleGraph::new(n);
        for &(u, v) in edges {
            g.add(u, v);
        }
        g
    }

    pub fn add(&mut self, u: usize, v: usize) {
        if u != v {
            self.edges.insert((u.min(v), u.max(v)));
        }
    }

    pub fn has(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn has_triangle(&self) -> bool {
        self.subsets(3).any(|s| self.has(s[0], s[1]) && self.has(s[1], s[2]) && self.has(s[0], s[2]))
    }

    /// A simple cycle through exactly four distinct vertices.
    pub fn has_four_cycle(&self) -> bool {
        self.subsets(4).any(|s| {
            let [a, b, c, d] = [s[0], s[1], s[2], s[3]];
            [(a, b, c, d), (a, b, d, c), (a, c, b, d)]
                .iter()
                .any(|&(w, x, y, z)| self.has(w, x) && self.has(x, y) && self.has(y, z) && self.has(z, w))
        })
    }

    pub fn has_four_clique(&self) -> bool {
        self.subsets(4)
            .any(|s| (0..4).all(|i| (i + 1..4).all(|j| self.has(s[i], s[j]))))
    }

    fn subsets(&self, k: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
        let n = self.n;
        (0u32..(1 << n)).filter(move |m| m.count_ones() as usize == k).map(move |m| {
            (0..n).filter(|i| m & (1 << i) != 0).collect()
        })
    }
}

/// Structural class: 0 with a 4-cycle, 1 with a triangle but no 4-cycle,
/// 2 otherwise.
pub fn cycle_class(g: &SimpleGraph) -> usize {
    if g.has_four_cycle() {
        0
    } else if g.has_triangle() {
        1
    } else {
        2
    }
}

/// Templates present in `g`, by name.
pub fn templates(g: &SimpleGraph) -> Vec<&'static str> {
    let mut out = Vec::new();
    if g.has_triangle() {
        out.push("cycle_3");
    }
    if g.has_four_cycle() {
        out.push("cycle_4");
    }
    if g.has_four_clique() {
        out.push("clique_4");
    }
    out
}

/// Samples a connected graph on `n` vertices of the requested class.
/// Class 0 plants a 4-cycle (a 4-clique when `clique`), class 1 a
/// triangle; extra edges are added only while the class is preserved.
pub fn sample_class<R: Rng>(rng: &mut R, n: usize, class: usize, clique: bool) -> SimpleGraph {
    loop {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut g = SimpleGraph::new(n);
        // random spanning tree
        for i in 1..n {
            let j = rng.gen_range(0..i);
            g.add(perm[i], perm[j]);
        }
        match class {
            0 if clique => {
                for i in 0..4 {
                    for j in i + 1..4 {
                        g.add(perm[i], perm[j]);
                    }
                }
            }
            0 => {
                for i in 0..4 {
                    g.add(perm[i], perm[(i + 1) % 4]);
                }
            }
            1 => {
                for i in 0..3 {
                    g.add(perm[i], perm[(i + 1) % 3]);
                }
            }
            _ => {}
        }
        if cycle_class(&g) != class {
            continue;
        }
        for _ in 0..rng.gen_range(0..=n / 3) {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u == v || g.has(u, v) {
                continue;
            }
            g.add(u, v);
            if cycle_class(&g) != class {
                g.edges.remove(&(u.min(v), u.max(v)));
            }
        }
        return g;
    }
}

/// Two graphs on six vertices that 1-WL refinement cannot tell apart. Same
/// degree sequence; only the first contains a 4-cycle, the second has two
/// triangles.
pub fn wl_pair() -> (SimpleGraph, SimpleGraph) {
    let g0 = SimpleGraph::from_edges(6, &[(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]);
    let g1 = SimpleGraph::from_edges(6, &[(0, 1), (0, 3), (1, 3), (1, 4), (2, 4), (2, 5), (4, 5)]);
    (g0, g1)
}
