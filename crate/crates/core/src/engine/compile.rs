use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::dsl::{CheckedProgram, ProbFact};
use crate::gnn::{sigmoid, GnnConfig};
use crate::logic::{Atom, AtomUniverse};
use crate::train::ParamStore;

use super::ground::{ground, stratify, GroundGnnFact};
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BaseRef {
    Prob(usize),
    /// (fact, member of the head group)
    Gnn(usize, usize),
}

#[derive(Debug, Clone)]
pub(crate) enum GammaPart {
    Label(usize, String),
    Edge(usize, String, usize),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledGnn {
    pub model: usize,
    /// Graph-specification atoms present in the universe, by atom id.
    pub gamma: Arc<Vec<(usize, GammaPart)>>,
    pub nodes: usize,
    pub targets: Vec<usize>,
    pub heads: Vec<usize>,
}

/// A grounded, integer-indexed program ready for repeated queries.
#[derive(Debug, Clone)]
pub struct Engine {
    pub(crate) atoms: Vec<Atom>,
    pub(crate) ids: HashMap<Atom, usize>,
    pub(crate) rules: Vec<(usize, Vec<usize>)>,
    pub(crate) by_head: Vec<Vec<usize>>,
    pub(crate) base: Vec<Option<BaseRef>>,
    pub(crate) prob_facts: Vec<ProbFact>,
    pub(crate) gnn: Vec<CompiledGnn>,
    pub(crate) node_lists: Vec<Vec<String>>,
    pub(crate) models: Vec<String>,
    pub(crate) configs: BTreeMap<String, GnnConfig>,
    facts: Vec<GroundGnnFact>,
    order: Vec<usize>,
    universe: AtomUniverse,
}

impl Engine {
    pub fn new(p: &CheckedProgram) -> Result<Self, EngineError> {
        let g = ground(p)?;
        let order = stratify(&g.gnn_facts, &g.rules)?;
        let mut atoms: Vec<Atom> = g.universe.atoms().iter().cloned().collect();
        for f in &p.prob_facts {
            if !g.universe.contains(&f.atom) {
                atoms.push(f.atom.clone());
            }
        }
        let ids: HashMap<Atom, usize> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let rules: Vec<(usize, Vec<usize>)> = g
            .rules
            .iter()
            .map(|r| (ids[&r.head], r.body.iter().map(|b| ids[b]).collect()))
            .collect();
        let mut by_head = vec![Vec::new(); atoms.len()];
        for (i, (h, _)) in rules.iter().enumerate() {
            by_head[*h].push(i);
        }
        let mut base = vec![None; atoms.len()];
        for (i, f) in p.prob_facts.iter().enumerate() {
            base[ids[&f.atom]] = Some(BaseRef::Prob(i));
        }
        let models: Vec<String> = p.configs.keys().cloned().collect();
        let mut node_lists: Vec<Vec<String>> = Vec::new();
        let mut node_ids: HashMap<*const BTreeSet<String>, usize> = HashMap::new();
        let mut compiled: HashMap<(*const BTreeSet<Atom>, usize), Arc<Vec<(usize, GammaPart)>>> = HashMap::new();
        let mut gnn = Vec::with_capacity(g.gnn_facts.len());
        for (fi, f) in g.gnn_facts.iter().enumerate() {
            let nodes_id = *node_ids.entry(Arc::as_ptr(&f.node_set)).or_insert_with(|| {
                node_lists.push(f.node_set.iter().cloned().collect());
                node_lists.len() - 1
            });
            let nodes = &node_lists[nodes_id];
            let vertex = |s: &str| nodes.binary_search_by(|n| n.as_str().cmp(s)).expect("vertex in node set");
            let gamma = compiled
                .entry((Arc::as_ptr(&f.gamma), nodes_id))
                .or_insert_with(|| {
                    let parts = f
                        .gamma
                        .iter()
                        .filter_map(|a| {
                            let id = *ids.get(a)?;
                            let part = match a.args.as_slice() {
                                [x] => GammaPart::Label(vertex(&x.to_string()), a.predicate.clone()),
                                [x, y] => GammaPart::Edge(
                                    vertex(&x.to_string()),
                                    a.predicate.clone(),
                                    vertex(&y.to_string()),
                                ),
                                _ => return None,
                            };
                            Some((id, part))
                        })
                        .collect();
                    Arc::new(parts)
                })
                .clone();
            let targets = f.targets.iter().map(|t| vertex(t)).collect();
            let heads: Vec<usize> = f.head_group.iter().map(|h| ids[h]).collect();
            for (m, &h) in heads.iter().enumerate() {
                base[h] = Some(BaseRef::Gnn(fi, m));
            }
            gnn.push(CompiledGnn {
                model: models.binary_search(&f.model_id).expect("validated model"),
                gamma,
                nodes: nodes_id,
                targets,
                heads,
            });
        }
        Ok(Engine {
            atoms,
            ids,
            rules,
            by_head,
            base,
            prob_facts: p.prob_facts.clone(),
            gnn,
            node_lists,
            models,
            configs: p.configs.clone(),
            facts: g.gnn_facts,
            order,
            universe: g.universe,
        })
    }

    pub fn universe(&self) -> &AtomUniverse {
        &self.universe
    }

    pub fn gnn_facts(&self) -> &[GroundGnnFact] {
        &self.facts
    }

    /// Evaluation order of [`Engine::gnn_facts`].
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn configs(&self) -> &BTreeMap<String, GnnConfig> {
        &self.configs
    }

    pub fn ground_rule_count(&self) -> usize {
        self.rules.len()
    }

    /// Current probability of every probabilistic fact.
    pub(crate) fn fact_probs(&self, store: &ParamStore) -> Result<Vec<f64>, EngineError> {
        self.prob_facts
            .iter()
            .map(|f| match (&f.param_id, f.learnable) {
                (Some(id), true) => store
                    .fact_logits
                    .get(id)
                    .map(|&z| sigmoid(z))
                    .ok_or_else(|| EngineError::MissingFact(id.clone())),
                _ => Ok(f.prob),
            })
            .collect()
    }
}
