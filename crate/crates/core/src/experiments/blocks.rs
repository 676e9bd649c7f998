//! One-move blocks world: can a glass-topped tower be built in one move (E4)?

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{atom, DatasetSpec, Split};
use crate::logic::Atom;
use crate::train::TrainingExample;

pub const BLOCKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Material {
    Metal,
    Plastic,
    Glass,
}

impl Material {
    pub fn name(self) -> &'static str {
        match self {
            Material::Metal => "metal",
            Material::Plastic => "plastic",
            Material::Glass => "glass",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlocksInstance {
    pub id: String,
    pub materials: Vec<Material>,
    /// `below[x] = Some(y)` when x sits on y.
    pub below: Vec<Option<usize>>,
    pub split: Split,
}

impl BlocksInstance {
    pub fn block(&self, i: usize) -> String {
        format!("{}_{i}", self.id)
    }

    pub fn is_clear(&self, x: usize) -> bool {
        !self.below.contains(&Some(x))
    }

    /// No ordered pair has a non-glass destination, so the constraint
    /// leaves nothing to move onto.
    pub fn no_legal_destination(&self) -> bool {
        let n = self.materials.len();
        !(0..n).any(|x| (0..n).any(|y| x != y && self.materials[y] != Material::Glass))
    }

    pub fn query(&self) -> Atom {
        atom("solvable", &[&self.id])
    }
}

/// Exhaustive one-move search: some clear block moved onto a different
/// clear non-glass block leaves a stack of height at least two whose top
/// is glass.
pub fn one_move_tower(inst: &BlocksInstance) -> bool {
    tower_reachable(inst, false)
}

/// Negative, but moving onto a glass block would have built the tower.
pub fn is_trap(inst: &BlocksInstance) -> bool {
    !tower_reachable(inst, false) && tower_reachable(inst, true)
}

fn tower_reachable(inst: &BlocksInstance, onto_glass: bool) -> bool {
    let n = inst.materials.len();
    for x in 0..n {
        for y in 0..n {
            if x == y || !inst.is_clear(x) || !inst.is_clear(y) {
                continue;
            }
            if !onto_glass && inst.materials[y] == Material::Glass {
                continue;
            }
            let mut below = inst.below.clone();
            below[x] = Some(y);
            let clear = |b: usize| !below.contains(&Some(b));
            if (0..n).any(|t| clear(t) && below[t].is_some() && inst.materials[t] == Material::Glass) {
                return true;
            }
        }
    }
    false
}

fn sample_instance<R: Rng>(rng: &mut R, id: String, split: Split, all_glass: bool) -> BlocksInstance {
    let all = [Material::Metal, Material::Plastic, Material::Glass];
    let materials: Vec<Material> = (0..BLOCKS)
        .map(|_| if all_glass { Material::Glass } else { *all.choose(rng).unwrap() })
        .collect();
    let mut order: Vec<usize> = (0..BLOCKS).collect();
    order.shuffle(rng);
    let mut below = vec![None; BLOCKS];
    for w in order.windows(2) {
        if rng.gen_bool(0.4) {
            below[w[1]] = Some(w[0]);
        }
    }
    BlocksInstance {
        id,
        materials,
        below,
        split,
    }
}

pub struct E4Data {
    pub instances: Vec<BlocksInstance>,
    /// (i) one graph-level network on the initial state.
    pub single: String,
    /// (ii) move network feeding the tower network, no constraint.
    pub unconstrained: String,
    /// (iii) move network, glass filter, tower network.
    pub pipeline: String,
}

impl E4Data {
    pub fn examples(&self, split: Split) -> Vec<TrainingExample> {
        self.instances
            .iter()
            .filter(|i| i.split == split)
            .map(|i| TrainingExample::new(i.query(), f64::from(u8::from(one_move_tower(i)))))
            .collect()
    }
}

fn state_atoms(inst: &BlocksInstance) -> Vec<String> {
    let mut out: Vec<String> = (0..BLOCKS)
        .map(|b| format!("{}({})", inst.materials[b].name(), inst.block(b)))
        .collect();
    for (x, y) in inst.below.iter().enumerate() {
        if let Some(y) = y {
            out.push(format!("on({},{})", inst.block(x), inst.block(*y)));
        }
    }
    out
}

/// Candidate moves are the ordered pairs of clear blocks.
fn two_stage(instances: &[BlocksInstance], hidden: usize, constrained: bool) -> String {
    let mut s = format!(
        "#model(m_move, layers=2, hidden={hidden}, readout=edge).\n\
         #model(m_tower, layers=2, hidden={hidden}, readout=graph).\n\
         solvable(I) :- cand(I,X,Y), after_move(X,Y), tower(I).\n"
    );
    if constrained {
        s.push_str("after_move(X,Y) :- move(X,Y), metal(Y).\nafter_move(X,Y) :- move(X,Y), plastic(Y).\n");
    } else {
        s.push_str("after_move(X,Y) :- move(X,Y).\n");
    }
    for inst in instances {
        let state = state_atoms(inst);
        for a in &state {
            let _ = writeln!(s, "{a}.");
        }
        let mut gamma = state.clone();
        for x in 0..BLOCKS {
            for y in 0..BLOCKS {
                if x == y || !inst.is_clear(x) || !inst.is_clear(y) {
                    continue;
                }
                let (bx, by) = (inst.block(x), inst.block(y));
                let _ = writeln!(s, "cand({},{bx},{by}).", inst.id);
                let _ = writeln!(s, "gnn(m_move, [{}], [{bx},{by}])::move({bx},{by}).", state.join(", "));
                if !constrained || inst.materials[y] != Material::Glass {
                    gamma.push(format!("after_move({bx},{by})"));
                }
            }
        }
        let _ = writeln!(s, "gnn(m_tower, [{}])::tower({}).", gamma.join(", "), inst.id);
    }
    s
}

fn single(instances: &[BlocksInstance], hidden: usize) -> String {
    let mut s = format!("#model(m_single, layers=3, hidden={hidden}, readout=graph).\n");
    for inst in instances {
        let state = state_atoms(inst);
        for a in &state {
            let _ = writeln!(s, "{a}.");
        }
        let _ = writeln!(s, "gnn(m_single, [{}])::solvable({}).", state.join(", "), inst.id);
    }
    s
}

/// Configurations of three blocks in four kinds, cycling by index:
/// positive, positive, trap negative (see [`is_trap`]), other negative.
/// Traps occur in the test split only, so what the networks learn never
/// covers the glass rule; every second trap slot is all glass. Training
/// trap slots get other negatives instead.
pub fn gen_e4(spec: &DatasetSpec) -> E4Data {
    let mut rng = spec.rng(0);
    let total = spec.train + spec.test;
    let mut instances = Vec::with_capacity(total);
    for i in 0..total {
        let split = if i < spec.train { Split::Train } else { Split::Test };
        let id = format!("w{i}");
        let kind = match (i % 4, split) {
            (2, Split::Train) => 3,
            (k, _) => k,
        };
        let inst = match kind {
            2 if i % 8 == 2 => sample_instance(&mut rng, id, split, true),
            kind => loop {
                let cand = sample_instance(&mut rng, id.clone(), split, false);
                let ok = match kind {
                    0 | 1 => one_move_tower(&cand),
                    2 => is_trap(&cand),
                    _ => !one_move_tower(&cand) && !is_trap(&cand),
                };
                if ok {
                    break cand;
                }
            },
        };
        instances.push(inst);
    }
    E4Data {
        single: single(&instances, spec.hidden),
        unconstrained: two_stage(&instances, spec.hidden, false),
        pipeline: two_stage(&instances, spec.hidden, true),
        instances,
    }
}
