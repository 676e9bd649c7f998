//! Family trees for learning fatherOf/motherOf from grandfatherOf labels (E3).

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{atom, DatasetSpec, Split};
use crate::train::TrainingExample;

pub const MAX_PERSONS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Person {
    pub name: String,
    pub male: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub id: usize,
    pub persons: Vec<Person>,
    /// (parent, child) indices into `persons`.
    pub parent_of: BTreeSet<(usize, usize)>,
    pub split: Split,
}

impl Family {
    pub fn is_father(&self, x: usize, y: usize) -> bool {
        self.persons[x].male && self.parent_of.contains(&(x, y))
    }

    pub fn is_mother(&self, x: usize, y: usize) -> bool {
        !self.persons[x].male && self.parent_of.contains(&(x, y))
    }

    /// A male parent of a parent of `y`.
    pub fn is_grandfather(&self, x: usize, y: usize) -> bool {
        self.persons[x].male
            && self
                .parent_of
                .iter()
                .any(|&(p, z)| p == x && self.parent_of.contains(&(z, y)))
    }

    /// Ordered pairs of distinct members.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.persons.len();
        (0..n).flat_map(move |x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
    }

    fn add(&mut self, male: bool) -> usize {
        let i = self.persons.len();
        self.persons.push(Person {
            name: format!("f{}_{i}", self.id),
            male,
        });
        i
    }
}

/// Up to four generations grown breadth-first from a founding couple:
/// each member below the last generation takes a partner and one to three
/// children with probability 0.8 while the twelve-person budget lasts.
fn sample_family<R: Rng>(rng: &mut R, id: usize, split: Split) -> Family {
    let mut f = Family {
        id,
        persons: Vec::new(),
        parent_of: BTreeSet::new(),
        split,
    };
    let dad = f.add(true);
    let mum = f.add(false);
    let mut queue = std::collections::VecDeque::new();
    let first = rng.gen_range(2..=3);
    for _ in 0..first {
        let c = f.add(rng.gen_bool(0.5));
        f.parent_of.insert((dad, c));
        f.parent_of.insert((mum, c));
        queue.push_back((c, 1));
    }
    while let Some((c, gen)) = queue.pop_front() {
        if gen >= 3 || f.persons.len() + 2 > MAX_PERSONS || !rng.gen_bool(0.8) {
            continue;
        }
        let partner = f.add(!f.persons[c].male);
        let room = MAX_PERSONS - f.persons.len();
        for _ in 0..rng.gen_range(1..=3).min(room) {
            let g = f.add(rng.gen_bool(0.5));
            f.parent_of.insert((c, g));
            f.parent_of.insert((partner, g));
            queue.push_back((g, gen + 1));
        }
    }
    f
}

pub struct E3Data {
    pub families: Vec<Family>,
    /// One network scoring each parent edge as father or mother (a head
    /// group, so exactly one holds), under the grandfather rules.
    pub program: String,
    /// Separate fatherOf and motherOf networks under the grandfather rules.
    pub rules_only: String,
    /// One network predicting grandfatherOf directly, no rules.
    pub baseline: String,
    pub train: Vec<TrainingExample>,
}

fn write_facts(out: &mut String, families: &[Family]) {
    for f in families {
        for p in &f.persons {
            let _ = writeln!(out, "{}({}).", if p.male { "m" } else { "f" }, p.name);
        }
        for &(x, y) in &f.parent_of {
            let _ = writeln!(out, "pOf({},{}).", f.persons[x].name, f.persons[y].name);
        }
    }
}

/// Positives are all grandfather pairs of training families; as many
/// negatives are drawn uniformly from the remaining same-family pairs.
pub fn gen_e3(spec: &DatasetSpec) -> E3Data {
    let mut rng = spec.rng(0);
    let families: Vec<Family> = (0..spec.train + spec.test)
        .map(|i| sample_family(&mut rng, i, if i < spec.train { Split::Train } else { Split::Test }))
        .collect();
    let mut positives = Vec::new();
    let mut pool = Vec::new();
    for f in families.iter().filter(|f| f.split == Split::Train) {
        for (x, y) in f.pairs() {
            let q = atom("grandfatherOf", &[&f.persons[x].name, &f.persons[y].name]);
            if f.is_grandfather(x, y) {
                positives.push(TrainingExample::new(q, 1.0));
            } else {
                pool.push(TrainingExample::new(q, 0.0));
            }
        }
    }
    pool.shuffle(&mut rng);
    pool.truncate(positives.len());
    let mut train = positives;
    train.extend(pool);

    let h = spec.hidden;
    let mut rules_only = format!(
        "#model(gcn_fOf, layers=2, hidden={h}, readout=edge).\n\
         #model(gcn_mOf, layers=2, hidden={h}, readout=edge).\n\
         gnn(gcn_fOf, [m/1, f/1, pOf/2], [X,Y])::fatherOf(X,Y) :- pOf(X,Y).\n\
         gnn(gcn_mOf, [m/1, f/1, pOf/2], [X,Y])::motherOf(X,Y) :- pOf(X,Y).\n\
         grandfatherOf(X,Y) :- fatherOf(X,Z), fatherOf(Z,Y).\n\
         grandfatherOf(X,Y) :- fatherOf(X,Z), motherOf(Z,Y).\n"
    );
    write_facts(&mut rules_only, &families);
    let mut program = format!(
        "#model(gcn_pOf, layers=2, hidden={h}, readout=edge).\n\
         gnn(gcn_pOf, [m/1, f/1, pOf/2], [X,Y])::fatherOf(X,Y); motherOf(X,Y) :- pOf(X,Y).\n\
         grandfatherOf(X,Y) :- fatherOf(X,Z), fatherOf(Z,Y).\n\
         grandfatherOf(X,Y) :- fatherOf(X,Z), motherOf(Z,Y).\n"
    );
    write_facts(&mut program, &families);
    let mut baseline = format!(
        "#model(gcn_base, layers=2, hidden={h}, readout=edge).\n\
         gnn(gcn_base, [m/1, f/1, pOf/2], [X,Y])::grandfatherOf(X,Y) :- cand(X,Y).\n"
    );
    write_facts(&mut baseline, &families);
    for f in &families {
        for (x, y) in f.pairs() {
            let _ = writeln!(baseline, "cand({},{}).", f.persons[x].name, f.persons[y].name);
        }
    }
    E3Data {
        families,
        program,
        rules_only,
        baseline,
        train,
    }
}
