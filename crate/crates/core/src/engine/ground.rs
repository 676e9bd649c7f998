//! Universe construction, schema grounding and ground-level stratification.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::dsl::{GammaItem, GnnFactSchema, Program};
use crate::logic::{
    ground_program, minimal_model, solve_conjunction, unify_extend, Atom, AtomIndex, AtomUniverse,
    Rule, Substitution, Term,
};

use super::EngineError;

/// A graph neural fact with its graph specification fully instantiated.
/// Groundings of one schema that share a specification share its storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundGnnFact {
    pub model_id: String,
    pub gamma: Arc<BTreeSet<Atom>>,
    pub node_set: Arc<BTreeSet<String>>,
    pub targets: Vec<String>,
    pub head_group: Vec<Atom>,
}

impl fmt::Display for GroundGnnFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let heads: Vec<String> = self.head_group.iter().map(Atom::to_string).collect();
        write!(f, "{}", heads.join(";"))
    }
}

/// Result of grounding a whole program.
#[derive(Debug, Clone)]
pub struct Grounding {
    pub universe: AtomUniverse,
    pub rules: Vec<Rule>,
    pub gnn_facts: Vec<GroundGnnFact>,
}

/// Least model with every base fact assumed true.
pub fn possible_atom_universe(p: &Program) -> Result<AtomUniverse, EngineError> {
    Ok(ground(p)?.universe)
}

/// Alternates schema grounding and forward chaining until the set of graph
/// neural heads stops growing.
pub fn ground(p: &Program) -> Result<Grounding, EngineError> {
    let base: BTreeSet<Atom> = p.prob_facts.iter().map(|f| f.atom.clone()).collect();
    let mut heads: BTreeSet<Atom> = BTreeSet::new();
    loop {
        let mut facts = base.clone();
        facts.extend(heads.iter().cloned());
        let rules = ground_program(&p.rules, &AtomUniverse::from_atoms(facts.iter().cloned()));
        let model = minimal_model(&facts, &rules);
        let universe = AtomUniverse::from_atoms(model);
        let gnn_facts = ground_gnn_schemas(p, &universe)?;
        let next: BTreeSet<Atom> = gnn_facts
            .iter()
            .flat_map(|f| f.head_group.iter().cloned())
            .collect();
        if next == heads {
            return Ok(Grounding {
                universe,
                rules,
                gnn_facts,
            });
        }
        heads = next;
    }
}

/// Expands every schema against `u`.
pub fn ground_gnn_schemas(p: &Program, u: &AtomUniverse) -> Result<Vec<GroundGnnFact>, EngineError> {
    let index = AtomIndex::from_atoms(u.atoms());
    let mut out: Vec<GroundGnnFact> = Vec::new();
    let mut owner: HashMap<Atom, usize> = HashMap::new();
    let fact_atoms: HashSet<&Atom> = p.prob_facts.iter().map(|f| &f.atom).collect();
    for schema in &p.gnn_schemas {
        for f in ground_schema(schema, u, &index)? {
            if let Some(&prev) = f.head_group.first().and_then(|h| owner.get(h)) {
                if out[prev] == f {
                    continue;
                }
            }
            for h in &f.head_group {
                if fact_atoms.contains(h) || owner.contains_key(h) {
                    return Err(EngineError::DuplicateHead(h.to_string()));
                }
                if f.gamma.contains(h) {
                    return Err(EngineError::Cycle(vec![h.to_string(), h.to_string()]));
                }
                owner.insert(h.clone(), out.len());
            }
            out.push(f);
        }
    }
    Ok(out)
}

fn ground_schema(
    s: &GnnFactSchema,
    u: &AtomUniverse,
    index: &AtomIndex,
) -> Result<Vec<GroundGnnFact>, EngineError> {
    let solutions = if s.guard.is_empty() {
        vec![Substitution::new()]
    } else {
        solve_conjunction(&s.guard, index)
    };
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut shared: Option<(Arc<BTreeSet<Atom>>, Arc<BTreeSet<String>>)> = None;
    for theta in solutions {
        let mut gamma = BTreeSet::new();
        for item in &s.gamma {
            match item {
                GammaItem::Indicator(k) => gamma.extend(u.atoms_of(k).cloned()),
                GammaItem::Atom(a) => {
                    let g = theta.apply_atom(a);
                    if g.is_ground() {
                        gamma.insert(g);
                    } else {
                        for cand in index.of(&g.key()) {
                            if unify_extend(&g, cand, &Substitution::new()).is_some() {
                                gamma.insert(cand.clone());
                            }
                        }
                    }
                }
            }
        }
        let mut node_set: BTreeSet<String> = BTreeSet::new();
        for a in &gamma {
            node_set.extend(a.args.iter().map(Term::to_string));
        }
        let targets: Vec<Term> = s.targets.iter().map(|t| theta.apply_term(t)).collect();
        for t in &targets {
            if t.is_ground() {
                node_set.insert(t.to_string());
            }
        }
        // Target variables left open range over the graph's vertices.
        let mut open: Vec<String> = Vec::new();
        for t in &targets {
            let mut vs = BTreeSet::new();
            t.collect_vars(&mut vs);
            for v in vs {
                if !open.contains(&v) {
                    open.push(v);
                }
            }
        }
        let (gamma, node_set) = match &shared {
            Some((g, n)) if **g == gamma && **n == node_set => (g.clone(), n.clone()),
            _ => (Arc::new(gamma), Arc::new(node_set)),
        };
        shared = Some((gamma.clone(), node_set.clone()));
        let nodes: Vec<String> = node_set.iter().cloned().collect();
        let mut bindings = vec![theta.clone()];
        for v in &open {
            let mut next = Vec::new();
            for b in &bindings {
                for c in &nodes {
                    let mut b2 = b.clone();
                    if b2.bind(v, Term::constant(c.clone())) {
                        next.push(b2);
                    }
                }
            }
            bindings = next;
        }
        for b in bindings {
            let head_group: Vec<Atom> = s.head_group.iter().map(|h| b.apply_atom(h)).collect();
            if let Some(h) = head_group.iter().find(|h| !h.is_ground()) {
                return Err(EngineError::NonGroundHead(h.to_string()));
            }
            if !seen.insert(head_group.clone()) {
                continue;
            }
            let targets: Vec<String> = s.targets.iter().map(|t| b.apply_term(t).to_string()).collect();
            out.push(GroundGnnFact {
                model_id: s.model_id.clone(),
                gamma: gamma.clone(),
                node_set: node_set.clone(),
                targets,
                head_group,
            });
        }
    }
    Ok(out)
}

/// Topological order of ground graph neural facts: `f` comes after `g` when
/// an atom of `f`'s graph specification is one of `g`'s heads or derivable
/// from them.
pub fn stratify(facts: &[GroundGnnFact], rules: &[Rule]) -> Result<Vec<usize>, EngineError> {
    let mut uses: HashMap<&Atom, Vec<&Atom>> = HashMap::new();
    for r in rules {
        for b in &r.body {
            uses.entry(b).or_default().push(&r.head);
        }
    }
    // facts sharing a specification are indexed once, as a group
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: HashMap<*const BTreeSet<Atom>, usize> = HashMap::new();
    let mut wants: HashMap<&Atom, Vec<usize>> = HashMap::new();
    for (i, f) in facts.iter().enumerate() {
        let next = groups.len();
        let g = *group_of.entry(Arc::as_ptr(&f.gamma)).or_insert(next);
        if g == next {
            groups.push(Vec::new());
            for a in f.gamma.iter() {
                wants.entry(a).or_default().push(g);
            }
        }
        groups[g].push(i);
    }
    // after[g] = facts that must follow g
    let mut after: Vec<Vec<usize>> = vec![Vec::new(); facts.len()];
    for (g, f) in facts.iter().enumerate() {
        let mut seen: HashSet<&Atom> = f.head_group.iter().collect();
        let mut stack: Vec<&Atom> = f.head_group.iter().collect();
        let mut deps = BTreeSet::new();
        while let Some(a) = stack.pop() {
            if let Some(ws) = wants.get(a) {
                deps.extend(ws.iter().flat_map(|&w| groups[w].iter().copied()));
            }
            if let Some(heads) = uses.get(a) {
                for h in heads {
                    if seen.insert(h) {
                        stack.push(h);
                    }
                }
            }
        }
        after[g] = deps.into_iter().collect();
    }
    if let Some(cycle) = crate::dsl::find_cycle(&after) {
        let mut names: Vec<String> = cycle.iter().map(|&i| facts[i].to_string()).collect();
        names.push(names[0].clone());
        return Err(EngineError::Cycle(names));
    }
    let mut indeg = vec![0usize; facts.len()];
    for succ in &after {
        for &s in succ {
            indeg[s] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..facts.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(facts.len());
    while let Some(g) = ready.pop_first() {
        order.push(g);
        for &s in &after[g] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.insert(s);
            }
        }
    }
    Ok(order)
}
