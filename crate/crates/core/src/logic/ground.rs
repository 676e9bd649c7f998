//! Bottom-up grounding, least-model computation and proof-relevance.

use std::collections::{BTreeSet, HashMap};

use super::term::{Atom, AtomUniverse, PredicateKey, Rule, Term};
use super::unify::{unify_extend, Substitution};

/// Ground atoms indexed by predicate for joins.
#[derive(Debug, Default, Clone)]
pub struct AtomIndex {
    by_pred: HashMap<PredicateKey, Vec<Atom>>,
    all: BTreeSet<Atom>,
}

impl AtomIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms<'a, I: IntoIterator<Item = &'a Atom>>(atoms: I) -> Self {
        let mut idx = Self::new();
        for a in atoms {
            idx.insert(a.clone());
        }
        idx
    }

    pub fn insert(&mut self, atom: Atom) -> bool {
        if self.all.contains(&atom) {
            return false;
        }
        self.by_pred.entry(atom.key()).or_default().push(atom.clone());
        self.all.insert(atom);
        true
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.all.contains(atom)
    }

    pub fn of(&self, key: &PredicateKey) -> &[Atom] {
        self.by_pred.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.all
    }
}

/// All substitutions under which every atom of `body` is in `index`.
pub fn solve_conjunction(body: &[Atom], index: &AtomIndex) -> Vec<Substitution> {
    let mut partial = vec![Substitution::new()];
    for goal in body {
        let mut next = Vec::new();
        for theta in &partial {
            let g = theta.apply_atom(goal);
            if g.is_ground() {
                if index.contains(&g) {
                    next.push(theta.clone());
                }
                continue;
            }
            for cand in index.of(&g.key()) {
                if let Some(ext) = unify_extend(&g, cand, theta) {
                    next.push(ext);
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            break;
        }
    }
    partial
}

/// Extends `theta` over every remaining variable of `vars` with every constant.
fn complete_over_constants(
    theta: Substitution,
    vars: &[String],
    constants: &[String],
) -> Vec<Substitution> {
    let mut out = vec![theta];
    for v in vars {
        let mut next = Vec::new();
        for s in &out {
            if s.get(v).is_some() {
                next.push(s.clone());
                continue;
            }
            for c in constants {
                let mut s2 = s.clone();
                if s2.bind(v, Term::Const(c.clone())) {
                    next.push(s2);
                }
            }
        }
        out = next;
    }
    out
}

/// Every ground instance of `rules` whose body lies in the closure of
/// `universe` under the rules. Head variables not bound by the body range
/// over the universe's constants.
pub fn ground_program(rules: &[Rule], universe: &AtomUniverse) -> Vec<Rule> {
    let mut known = AtomIndex::from_atoms(universe.atoms());
    let constants: Vec<String> = universe.constants().iter().cloned().collect();
    let mut ground: BTreeSet<Rule> = BTreeSet::new();
    loop {
        let mut new_heads = Vec::new();
        for rule in rules {
            for theta in solve_conjunction(&rule.body, &known) {
                let free: Vec<String> = rule
                    .head
                    .vars()
                    .into_iter()
                    .filter(|v| theta.get(v).is_none())
                    .collect();
                for full in complete_over_constants(theta, &free, &constants) {
                    let inst = full.apply_rule(rule);
                    if !inst.is_ground() {
                        continue;
                    }
                    if !known.contains(&inst.head) {
                        new_heads.push(inst.head.clone());
                    }
                    ground.insert(inst);
                }
            }
        }
        let mut changed = false;
        for h in new_heads {
            changed |= known.insert(h);
        }
        if !changed {
            break;
        }
    }
    ground.into_iter().collect()
}

/// Least fixpoint of forward chaining over ground rules.
pub fn minimal_model(facts: &BTreeSet<Atom>, ground_rules: &[Rule]) -> BTreeSet<Atom> {
    let mut model = facts.clone();
    let mut remaining: Vec<usize> = ground_rules.iter().map(|r| r.body.len()).collect();
    let mut watchers: HashMap<&Atom, Vec<usize>> = HashMap::new();
    let mut queue: Vec<Atom> = Vec::new();
    for (i, r) in ground_rules.iter().enumerate() {
        for b in &r.body {
            let w = watchers.entry(b).or_default();
            if w.last() != Some(&i) {
                w.push(i);
            }
        }
        if r.body.is_empty() && model.insert(r.head.clone()) {
            queue.push(r.head.clone());
        }
    }
    queue.extend(model.iter().cloned());
    let mut processed: BTreeSet<Atom> = BTreeSet::new();
    while let Some(a) = queue.pop() {
        if !processed.insert(a.clone()) {
            continue;
        }
        if let Some(ws) = watchers.get(&a) {
            for &ri in ws {
                // a body may list the same atom twice
                let dup = ground_rules[ri].body.iter().filter(|b| **b == a).count();
                remaining[ri] -= dup.min(remaining[ri]);
                if remaining[ri] == 0 {
                    let h = &ground_rules[ri].head;
                    if model.insert(h.clone()) {
                        queue.push(h.clone());
                    }
                }
            }
        }
    }
    model
}

/// Base facts that can influence a query's truth.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelevantFacts {
    pub facts: BTreeSet<Atom>,
    /// False when the query has no proof even with every base fact true.
    pub provable: bool,
}

/// Tabled backward chaining over the ground program with every base fact
/// assumed true. Collects each base fact reachable from `query` through a
/// rule whose body is satisfiable; visited goals are not re-expanded, so
/// recursive programs terminate.
pub fn relevant_facts(
    query: &Atom,
    ground_rules: &[Rule],
    base_facts: &BTreeSet<Atom>,
) -> RelevantFacts {
    let full = minimal_model(base_facts, ground_rules);
    if !full.contains(query) {
        return RelevantFacts::default();
    }
    let mut by_head: HashMap<&Atom, Vec<&Rule>> = HashMap::new();
    for r in ground_rules {
        if r.body.iter().all(|b| full.contains(b)) {
            by_head.entry(&r.head).or_default().push(r);
        }
    }
    let mut visited: BTreeSet<&Atom> = BTreeSet::new();
    let mut facts = BTreeSet::new();
    let mut stack = vec![query];
    while let Some(goal) = stack.pop() {
        if !visited.insert(goal) {
            continue;
        }
        if base_facts.contains(goal) {
            facts.insert(goal.clone());
        }
        if let Some(rs) = by_head.get(goal) {
            for r in rs {
                stack.extend(r.body.iter());
            }
        }
    }
    RelevantFacts {
        facts,
        provable: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn blocks_rules() -> Vec<Rule> {
        vec![
            Rule::new(
                Atom::new("move", vec![v("X")]),
                vec![Atom::new("on", vec![v("X"), v("Y")])],
            ),
            Rule::new(
                Atom::new("move", vec![v("X")]),
                vec![Atom::new("next_to", vec![v("X"), v("Y")])],
            ),
            Rule::new(
                Atom::new("legal_move", vec![v("X")]),
                vec![Atom::new("move", vec![v("X")]), Atom::new("light", vec![v("X")])],
            ),
        ]
    }

    fn blocks_facts() -> BTreeSet<Atom> {
        [
            Atom::ground("on", &["a", "b"]),
            Atom::ground("next_to", &["a", "c"]),
            Atom::ground("light", &["a"]),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn single_binding_grounding() {
        let rules = vec![blocks_rules()[0].clone()];
        let u = AtomUniverse::from_atoms([Atom::ground("on", &["a", "b"])]);
        let g = ground_program(&rules, &u);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].to_string(), "move(a) :- on(a,b).");
    }

    #[test]
    fn empty_program_grounds_to_nothing() {
        let u = AtomUniverse::from_atoms(blocks_facts());
        assert!(ground_program(&[], &u).is_empty());
    }

    #[test]
    fn blocks_grounding_contains_legal_move() {
        let mut u = AtomUniverse::from_atoms(blocks_facts());
        u.add_constant("c");
        let g = ground_program(&blocks_rules(), &u);
        let want = "legal_move(a) :- move(a), light(a).";
        assert!(g.iter().any(|r| r.to_string() == want));
        assert!(g.iter().all(Rule::is_ground));
    }

    #[test]
    fn minimal_model_examples() {
        let u = AtomUniverse::from_atoms(blocks_facts());
        let g = ground_program(&blocks_rules(), &u);

        let facts: BTreeSet<Atom> =
            [Atom::ground("on", &["a", "b"]), Atom::ground("light", &["a"])].into();
        let m = minimal_model(&facts, &g);
        let want: BTreeSet<Atom> = [
            Atom::ground("on", &["a", "b"]),
            Atom::ground("light", &["a"]),
            Atom::ground("move", &["a"]),
            Atom::ground("legal_move", &["a"]),
        ]
        .into();
        assert_eq!(m, want);

        assert!(minimal_model(&BTreeSet::new(), &g).is_empty());

        let facts: BTreeSet<Atom> = [Atom::ground("next_to", &["a", "c"])].into();
        let m = minimal_model(&facts, &g);
        let want: BTreeSet<Atom> =
            [Atom::ground("next_to", &["a", "c"]), Atom::ground("move", &["a"])].into();
        assert_eq!(m, want);
    }

    #[test]
    fn relevant_facts_examples() {
        let base = blocks_facts();
        let u = AtomUniverse::from_atoms(base.clone());
        let g = ground_program(&blocks_rules(), &u);

        let r = relevant_facts(&Atom::ground("legal_move", &["a"]), &g, &base);
        assert!(r.provable);
        assert_eq!(r.facts, base);

        let q = Atom::ground("on", &["a", "b"]);
        let r = relevant_facts(&q, &g, &base);
        assert_eq!(r.facts, [q].into());

        let r = relevant_facts(&Atom::ground("unprovable", &["x"]), &g, &base);
        assert!(!r.provable);
        assert!(r.facts.is_empty());
    }

    #[test]
    fn recursive_path_terminates() {
        let rules = vec![
            Rule::new(
                Atom::new("path", vec![v("X"), v("Y")]),
                vec![Atom::new("link", vec![v("X"), v("Y")])],
            ),
            Rule::new(
                Atom::new("path", vec![v("X"), v("Y")]),
                vec![
                    Atom::new("link", vec![v("X"), v("Z")]),
                    Atom::new("path", vec![v("Z"), v("Y")]),
                ],
            ),
        ];
        let base: BTreeSet<Atom> = [
            Atom::ground("link", &["a", "b"]),
            Atom::ground("link", &["b", "a"]),
            Atom::ground("link", &["b", "c"]),
            Atom::ground("link", &["d", "e"]),
        ]
        .into();
        let g = ground_program(&rules, &AtomUniverse::from_atoms(base.clone()));
        let r = relevant_facts(&Atom::ground("path", &["a", "c"]), &g, &base);
        assert!(r.provable);
        assert!(!r.facts.contains(&Atom::ground("link", &["d", "e"])));
        assert!(r.facts.contains(&Atom::ground("link", &["b", "c"])));
    }
}
