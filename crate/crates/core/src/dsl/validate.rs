use std::collections::{BTreeMap, BTreeSet};

use crate::gnn::{GnnConfig, Readout};
use crate::logic::PredicateKey;

use super::error::DslError;
use super::program::{CheckedProgram, GammaItem, Program};

/// Checks every program invariant and derives the network configurations.
pub fn validate(mut p: Program) -> Result<CheckedProgram, DslError> {
    for (i, pf) in p.prob_facts.iter_mut().enumerate() {
        let pos = p.source.prob_facts.get(i).copied();
        if !pf.atom.is_ground() {
            return Err(DslError::NonGround {
                pos,
                what: format!("probabilistic fact {}", pf.atom),
            });
        }
        if pf.learnable {
            if !(pf.prob > 0.0 && pf.prob < 1.0) {
                return Err(DslError::InvalidProbability {
                    pos,
                    atom: pf.atom.to_string(),
                    value: pf.prob,
                    range: "(0,1)",
                });
            }
            pf.param_id.get_or_insert_with(|| pf.atom.to_string());
        } else if !(0.0..=1.0).contains(&pf.prob) {
            return Err(DslError::InvalidProbability {
                pos,
                atom: pf.atom.to_string(),
                value: pf.prob,
                range: "[0,1]",
            });
        }
    }

    for (i, r) in p.rules.iter().enumerate() {
        let body_vars: BTreeSet<String> = r.body.iter().flat_map(|b| b.vars()).collect();
        if let Some(v) = r.head.vars().into_iter().find(|v| !body_vars.contains(v)) {
            return Err(DslError::UnboundVariable {
                pos: p.rule_pos(i),
                var: v,
                context: format!("rule head {}", r.head),
            });
        }
    }

    let fact_atoms: BTreeSet<_> = p.prob_facts.iter().map(|f| &f.atom).collect();
    let mut ground_heads = BTreeSet::new();
    for (i, s) in p.gnn_schemas.iter().enumerate() {
        let pos = p.schema_pos(i);
        if !p.models.contains_key(&s.model_id) {
            return Err(DslError::UnknownModel {
                pos,
                model: s.model_id.clone(),
            });
        }
        for g in &s.gamma {
            let arity = g.key().arity;
            if arity == 0 || arity > 2 {
                return Err(DslError::InvalidGamma {
                    pos,
                    message: format!("{g} has arity {arity}; only unary and binary atoms encode graphs"),
                });
            }
        }
        let mut bound: BTreeSet<String> = s.guard.iter().flat_map(|g| g.vars()).collect();
        for t in &s.targets {
            t.collect_vars(&mut bound);
        }
        for h in &s.head_group {
            if let Some(v) = h.vars().into_iter().find(|v| !bound.contains(v)) {
                return Err(DslError::UnboundVariable {
                    pos,
                    var: v,
                    context: format!("graph neural fact head {h}"),
                });
            }
            if h.is_ground() {
                if fact_atoms.contains(h) {
                    return Err(DslError::Duplicate {
                        pos,
                        what: format!("{h} as both probabilistic fact and graph neural fact"),
                    });
                }
                if !ground_heads.insert(h.clone()) {
                    return Err(DslError::Duplicate {
                        pos,
                        what: format!("graph neural fact {h}"),
                    });
                }
            }
        }
        let distinct: BTreeSet<_> = s.head_group.iter().collect();
        if distinct.len() != s.head_group.len() {
            return Err(DslError::Duplicate {
                pos,
                what: format!("head atom in group {}", s.describe()),
            });
        }
    }

    check_stratification(&p)?;
    let configs = derive_configs(&p)?;
    Ok(CheckedProgram { program: p, configs })
}

/// Predicate-level dependency check between schemas: schema A depends on B
/// when a predicate in A's graph specification is B's head predicate or is
/// derivable from it through the rules.
fn check_stratification(p: &Program) -> Result<(), DslError> {
    let mut derives: BTreeMap<PredicateKey, BTreeSet<PredicateKey>> = BTreeMap::new();
    for r in &p.rules {
        for b in &r.body {
            derives.entry(b.key()).or_default().insert(r.head.key());
        }
    }
    let reach = |start: &BTreeSet<PredicateKey>| -> BTreeSet<PredicateKey> {
        let mut seen = start.clone();
        let mut stack: Vec<PredicateKey> = start.iter().cloned().collect();
        while let Some(k) = stack.pop() {
            if let Some(next) = derives.get(&k) {
                for n in next {
                    if seen.insert(n.clone()) {
                        stack.push(n.clone());
                    }
                }
            }
        }
        seen
    };
    let n = p.gnn_schemas.len();
    let reaches: Vec<BTreeSet<PredicateKey>> =
        p.gnn_schemas.iter().map(|s| reach(&s.head_keys())).collect();
    let gammas: Vec<BTreeSet<PredicateKey>> =
        p.gnn_schemas.iter().map(|s| s.gamma_keys()).collect();
    // edges[a] = schemas that a depends on
    let edges: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..n).filter(|&b| !gammas[a].is_disjoint(&reaches[b])).collect())
        .collect();
    if let Some(cycle) = find_cycle(&edges) {
        let mut names: Vec<String> = cycle.iter().map(|&i| p.gnn_schemas[i].describe()).collect();
        names.push(names[0].clone());
        return Err(DslError::StratificationCycle { cycle: names });
    }
    Ok(())
}

/// One cycle of a directed graph given as adjacency lists, if any.
pub(crate) fn find_cycle(edges: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn dfs(u: usize, edges: &[Vec<usize>], mark: &mut [Mark], path: &mut Vec<usize>) -> Option<Vec<usize>> {
        mark[u] = Mark::Active;
        path.push(u);
        for &v in &edges[u] {
            match mark[v] {
                Mark::Active => {
                    let start = path.iter().position(|&x| x == v).unwrap();
                    return Some(path[start..].to_vec());
                }
                Mark::New => {
                    if let Some(c) = dfs(v, edges, mark, path) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        path.pop();
        mark[u] = Mark::Done;
        None
    }
    let mut mark = vec![Mark::New; edges.len()];
    for u in 0..edges.len() {
        if mark[u] == Mark::New {
            let mut path = Vec::new();
            if let Some(c) = dfs(u, edges, &mut mark, &mut path) {
                return Some(c);
            }
        }
    }
    None
}

fn derive_configs(p: &Program) -> Result<BTreeMap<String, GnnConfig>, DslError> {
    let mut out = BTreeMap::new();
    for (id, decl) in &p.models {
        let users: Vec<(usize, _)> = p
            .gnn_schemas
            .iter()
            .enumerate()
            .filter(|(_, s)| &s.model_id == id)
            .collect();
        let mut relations = BTreeSet::new();
        let mut labels = BTreeSet::new();
        let mut output_arity = None;
        for (i, s) in &users {
            let pos = p.schema_pos(*i);
            let want = match decl.readout {
                Readout::Node => 1,
                Readout::Edge => 2,
                Readout::Graph => 0,
            };
            if s.targets.len() != want {
                return Err(DslError::ModelMismatch {
                    pos,
                    model: id.clone(),
                    message: format!(
                        "{} readout needs {want} target(s), got {}",
                        decl.readout,
                        s.targets.len()
                    ),
                });
            }
            let k = s.head_group.len();
            match output_arity {
                None => output_arity = Some(k),
                Some(prev) if prev != k => {
                    return Err(DslError::ModelMismatch {
                        pos,
                        model: id.clone(),
                        message: format!("head groups of size {prev} and {k} share one network"),
                    })
                }
                _ => {}
            }
            for g in &s.gamma {
                let key = match g {
                    GammaItem::Atom(a) => a.key(),
                    GammaItem::Indicator(k) => k.clone(),
                };
                if key.arity == 1 {
                    labels.insert(key.name);
                } else {
                    relations.insert(key.name);
                }
            }
        }
        out.insert(
            id.clone(),
            GnnConfig {
                model_id: id.clone(),
                num_layers: decl.layers,
                hidden_dim: decl.hidden,
                relations: relations.into_iter().collect(),
                vertex_labels: labels.into_iter().collect(),
                readout: decl.readout,
                output_arity: output_arity.unwrap_or(1),
            },
        );
    }
    Ok(out)
}
