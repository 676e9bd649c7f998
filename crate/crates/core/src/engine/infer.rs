//! Per-query relevance, world enumeration and gradients through the world sum.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use crate::gnn::{backward_embed, backward_readout, embed, readout, Embedding, GraphInput, LabelledGraph, ReadoutTrace};
use crate::logic::Atom;
use crate::train::ParamStore;

use super::compile::{BaseRef, Engine, GammaPart};
use super::{EngineError, InferenceOptions, InferenceResult};

/// Canonical identity of an induced graph: model, vertex list and the sorted
/// ids of the true graph-specification atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphKey {
    model: usize,
    nodes: usize,
    atoms: Vec<u32>,
}

#[derive(Debug, Clone)]
enum Var {
    Fact { fact: usize, local: usize },
    Neural { slot: usize },
}

#[derive(Debug, Clone)]
struct PlanGnn {
    fact: usize,
    heads: Vec<usize>,
    /// (local id, global id) of graph-specification atoms
    gamma: Vec<(usize, u32)>,
}

/// Everything about a query that does not depend on parameter values.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    query: Atom,
    evidence: Option<Atom>,
    q: Option<usize>,
    e: Option<usize>,
    n: usize,
    rules: Vec<(usize, Vec<usize>)>,
    watchers: Vec<Vec<usize>>,
    fixed: Vec<usize>,
    vars: Vec<Var>,
    gnns: Vec<PlanGnn>,
    relevant: usize,
}

impl QueryPlan {
    pub fn query(&self) -> &Atom {
        &self.query
    }

    pub fn relevant_fact_count(&self) -> usize {
        self.relevant
    }

    pub fn world_count(&self) -> u64 {
        self.vars.iter().map(|v| self.domain(v) as u64).product()
    }

    /// Indices of the ground graph neural facts the query depends on.
    pub fn gnn_facts(&self) -> Vec<usize> {
        self.gnns.iter().map(|g| g.fact).collect()
    }

    fn domain(&self, v: &Var) -> usize {
        match v {
            Var::Fact { .. } => 2,
            Var::Neural { slot } => match self.gnns[*slot].heads.len() {
                1 => 2,
                k => k,
            },
        }
    }
}

/// Embeddings shared across queries evaluated under one parameter setting.
#[derive(Debug, Default)]
pub struct EmbedCache {
    map: RwLock<HashMap<GraphKey, Arc<Embedding>>>,
}

impl EmbedCache {
    pub fn new() -> Self {
        Self::default()
    }
}

struct Entry {
    key: GraphKey,
    fact: usize,
    emb: Arc<Embedding>,
    trace: ReadoutTrace,
    upstream: Vec<f64>,
}

struct Run {
    joint: f64,
    evidence: f64,
    mass: f64,
    worlds: u64,
    evaluations: u64,
    fact_grads: Vec<f64>,
    entries: Vec<Entry>,
}

/// Sensitivities of one query's probability, ready to be chain-ruled.
pub struct PlanGrad {
    pub probability: f64,
    facts: Vec<(usize, f64)>,
    entries: Vec<Entry>,
}

/// Gradient of a scalar objective with respect to a [`ParamStore`].
/// Embedding-level sensitivities are kept per induced graph so each graph
/// is backpropagated through the message-passing layers once.
pub struct Gradient {
    pub params: ParamStore,
    embeds: BTreeMap<GraphKey, (Arc<Embedding>, Vec<f64>)>,
}

impl Gradient {
    pub fn zeros(store: &ParamStore) -> Self {
        Gradient {
            params: store.zeros_like(),
            embeds: BTreeMap::new(),
        }
    }

    pub fn merge(&mut self, other: Gradient) {
        self.params.add_scaled(&other.params, 1.0);
        for (k, (emb, d)) in other.embeds {
            match self.embeds.get_mut(&k) {
                Some((_, mine)) => mine.iter_mut().zip(&d).for_each(|(a, b)| *a += b),
                None => {
                    self.embeds.insert(k, (emb, d));
                }
            }
        }
    }

    pub fn finish(mut self, engine: &Engine, store: &ParamStore) -> Result<ParamStore, EngineError> {
        for (key, (emb, d)) in std::mem::take(&mut self.embeds) {
            let id = &engine.models[key.model];
            let params = store.models.get(id).ok_or_else(|| EngineError::MissingModel(id.clone()))?;
            let grads = self.params.models.get_mut(id).expect("gradient mirrors store");
            backward_embed(&engine.configs[id], params, &emb, d, grads)?;
        }
        Ok(self.params)
    }
}

impl PlanGrad {
    /// Adds `scale · ∂P/∂θ` to `grad`.
    pub fn accumulate(
        &self,
        engine: &Engine,
        store: &ParamStore,
        scale: f64,
        grad: &mut Gradient,
    ) -> Result<(), EngineError> {
        for &(fact, d) in &self.facts {
            let f = &engine.prob_facts[fact];
            if let (true, Some(id)) = (f.learnable, &f.param_id) {
                let p = store.prob(id).ok_or_else(|| EngineError::MissingFact(id.clone()))?;
                *grad.params.fact_logits.entry(id.clone()).or_insert(0.0) += scale * d * p * (1.0 - p);
            }
        }
        for e in &self.entries {
            let id = &engine.models[e.key.model];
            let cfg = &engine.configs[id];
            let params = store.models.get(id).ok_or_else(|| EngineError::MissingModel(id.clone()))?;
            let up: Vec<f64> = e.upstream.iter().map(|u| u * scale).collect();
            let size = e.emb.vertex_count() * cfg.hidden_dim;
            let (_, d_emb) = grad
                .embeds
                .entry(e.key.clone())
                .or_insert_with(|| (e.emb.clone(), vec![0.0; size]));
            let g = grad.params.models.get_mut(id).expect("gradient mirrors store");
            backward_readout(cfg, params, &e.emb, &e.trace, &up, g, d_emb)?;
        }
        Ok(())
    }
}

impl Engine {
    /// Collects the base facts a query (and optional evidence) can depend
    /// on: the backward cone through the rules, closed under the graph
    /// specifications and head groups of every relevant neural fact.
    pub fn plan(&self, query: &Atom, evidence: Option<&Atom>, cap: usize) -> Result<QueryPlan, EngineError> {
        for a in std::iter::once(query).chain(evidence) {
            if !a.is_ground() {
                return Err(EngineError::NonGroundQuery(a.to_string()));
            }
        }
        let goals: Vec<usize> = std::iter::once(query)
            .chain(evidence)
            .filter_map(|a| self.ids.get(a).copied())
            .collect();
        let mut seen = vec![false; self.atoms.len()];
        let mut order: Vec<usize> = Vec::new();
        let mut gnn_seen: BTreeMap<usize, ()> = BTreeMap::new();
        let mut stack = goals;
        while let Some(a) = stack.pop() {
            if seen[a] {
                continue;
            }
            seen[a] = true;
            order.push(a);
            if let Some(BaseRef::Gnn(f, _)) = self.base[a] {
                if gnn_seen.insert(f, ()).is_none() {
                    let g = &self.gnn[f];
                    stack.extend(g.heads.iter().copied());
                    stack.extend(g.gamma.iter().map(|(id, _)| *id));
                }
            }
            for &r in &self.by_head[a] {
                stack.extend(self.rules[r].1.iter().copied());
            }
        }
        order.sort_unstable();
        let local: HashMap<usize, usize> = order.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let n = order.len();
        let mut rules = Vec::new();
        let mut watchers = vec![Vec::new(); n];
        for &a in &order {
            for &r in &self.by_head[a] {
                let (h, body) = &self.rules[r];
                let ri = rules.len();
                let body: Vec<usize> = body.iter().map(|b| local[b]).collect();
                for &b in &body {
                    let w: &mut Vec<usize> = &mut watchers[b];
                    if w.last() != Some(&ri) {
                        w.push(ri);
                    }
                }
                rules.push((local[h], body));
            }
        }
        let mut fixed = Vec::new();
        let mut vars = Vec::new();
        let mut gnns = Vec::new();
        let mut relevant = 0;
        for &a in &order {
            match self.base[a] {
                Some(BaseRef::Prob(i)) => {
                    let f = &self.prob_facts[i];
                    if f.is_certain() {
                        if f.prob == 1.0 {
                            fixed.push(local[&a]);
                        }
                    } else {
                        relevant += 1;
                        vars.push(Var::Fact {
                            fact: i,
                            local: local[&a],
                        });
                    }
                }
                Some(BaseRef::Gnn(f, 0)) => {
                    let g = &self.gnn[f];
                    relevant += g.heads.len();
                    vars.push(Var::Neural { slot: gnns.len() });
                    gnns.push(PlanGnn {
                        fact: f,
                        heads: g.heads.iter().map(|h| local[h]).collect(),
                        gamma: g.gamma.iter().map(|(id, _)| (local[id], *id as u32)).collect(),
                    });
                }
                _ => {}
            }
        }
        if relevant > cap {
            return Err(EngineError::CapExceeded { count: relevant, cap });
        }
        let find = |a: &Atom| self.ids.get(a).and_then(|g| local.get(g)).copied();
        Ok(QueryPlan {
            query: query.clone(),
            evidence: evidence.cloned(),
            q: find(query),
            e: evidence.and_then(find),
            n,
            rules,
            watchers,
            fixed,
            vars,
            gnns,
            relevant,
        })
    }

    pub fn marginal(&self, q: &Atom, store: &ParamStore, opts: &InferenceOptions) -> Result<InferenceResult, EngineError> {
        let plan = self.plan(q, None, opts.cap)?;
        self.evaluate(&plan, store, opts)
    }

    pub fn conditional(
        &self,
        q: &Atom,
        e: &Atom,
        store: &ParamStore,
        opts: &InferenceOptions,
    ) -> Result<InferenceResult, EngineError> {
        let plan = self.plan(q, Some(e), opts.cap)?;
        self.evaluate(&plan, store, opts)
    }

    /// Marginal, or conditional when the plan carries evidence.
    pub fn evaluate(&self, plan: &QueryPlan, store: &ParamStore, opts: &InferenceOptions) -> Result<InferenceResult, EngineError> {
        let cache = EmbedCache::new();
        let run = self.run(plan, store, opts.cache, &cache, false, false)?;
        let probability = match &plan.evidence {
            None => run.joint,
            Some(e) => {
                if run.evidence <= 0.0 {
                    return Err(EngineError::UndefinedConditional { evidence: e.to_string() });
                }
                (run.joint / run.evidence).min(1.0)
            }
        };
        let query = match &plan.evidence {
            None => plan.query.to_string(),
            Some(e) => format!("{} | {}", plan.query, e),
        };
        Ok(InferenceResult {
            query,
            probability,
            worlds_enumerated: run.worlds,
            distinct_gnn_evaluations: run.evaluations,
            relevant_fact_count: plan.relevant,
        })
    }

    /// Sum of all world weights over the plan's facts; 1 up to rounding.
    pub fn total_mass(&self, plan: &QueryPlan, store: &ParamStore) -> Result<f64, EngineError> {
        Ok(self.run(plan, store, true, &EmbedCache::new(), false, true)?.mass)
    }

    /// Marginal of the plan's query with its sensitivities to every parameter.
    pub fn marginal_grad(&self, plan: &QueryPlan, store: &ParamStore, cache: &EmbedCache) -> Result<PlanGrad, EngineError> {
        let run = self.run(plan, store, true, cache, true, false)?;
        let facts = plan
            .vars
            .iter()
            .zip(&run.fact_grads)
            .filter_map(|(v, d)| match v {
                Var::Fact { fact, .. } => Some((*fact, *d)),
                Var::Neural { .. } => None,
            })
            .collect();
        Ok(PlanGrad {
            probability: run.joint,
            facts,
            entries: run.entries,
        })
    }

    fn run(
        &self,
        plan: &QueryPlan,
        store: &ParamStore,
        use_cache: bool,
        cache: &EmbedCache,
        want_grad: bool,
        want_mass: bool,
    ) -> Result<Run, EngineError> {
        let probs = self.fact_probs(store)?;
        let radix: Vec<usize> = plan.vars.iter().map(|v| plan.domain(v)).collect();
        let worlds = plan.world_count();
        let mut digits = vec![0usize; radix.len()];
        let mut truth = vec![false; plan.n];
        let mut remaining = vec![0usize; plan.rules.len()];
        let mut queue = Vec::new();
        let mut phis = vec![0.0; radix.len()];
        let mut slots: Vec<Option<usize>> = vec![None; radix.len()];
        let mut prefix = vec![1.0; radix.len() + 1];
        let mut lookup: HashMap<(GraphKey, usize), usize> = HashMap::new();
        let mut run = Run {
            joint: 0.0,
            evidence: 0.0,
            mass: 0.0,
            worlds,
            evaluations: 0,
            fact_grads: vec![0.0; radix.len()],
            entries: Vec::new(),
        };

        for _ in 0..worlds {
            truth.iter_mut().for_each(|t| *t = false);
            queue.clear();
            for &f in &plan.fixed {
                truth[f] = true;
            }
            for (i, v) in plan.vars.iter().enumerate() {
                match v {
                    Var::Fact { local, .. } => truth[*local] = digits[i] == 1,
                    Var::Neural { slot } => {
                        let heads = &plan.gnns[*slot].heads;
                        if heads.len() == 1 {
                            truth[heads[0]] = digits[i] == 1;
                        } else {
                            truth[heads[digits[i]]] = true;
                        }
                    }
                }
            }
            forward_chain(plan, &mut truth, &mut remaining, &mut queue);
            let q_true = plan.q.is_some_and(|q| truth[q]);
            let e_true = plan.e.is_some_and(|e| truth[e]);
            let needed = match plan.evidence {
                None => q_true,
                Some(_) => e_true,
            };
            if needed || want_mass {
                for (i, v) in plan.vars.iter().enumerate() {
                    phis[i] = match v {
                        Var::Fact { fact, .. } => {
                            let p = probs[*fact];
                            if digits[i] == 1 {
                                p
                            } else {
                                1.0 - p
                            }
                        }
                        Var::Neural { slot } => {
                            let idx = self.neural(plan, *slot, &truth, store, use_cache, cache, &mut lookup, &mut run)?;
                            slots[i] = Some(idx);
                            let out = &run.entries[idx].trace.output;
                            if out.len() == 1 {
                                if digits[i] == 1 {
                                    out[0]
                                } else {
                                    1.0 - out[0]
                                }
                            } else {
                                out[digits[i]]
                            }
                        }
                    };
                }
                for i in 0..phis.len() {
                    prefix[i + 1] = prefix[i] * phis[i];
                }
                let w = prefix[phis.len()];
                run.mass += w;
                if e_true {
                    run.evidence += w;
                }
                let counts = match plan.evidence {
                    None => q_true,
                    Some(_) => q_true && e_true,
                };
                if counts {
                    run.joint += w;
                    if want_grad {
                        let mut suffix = 1.0;
                        for i in (0..phis.len()).rev() {
                            let loo = prefix[i] * suffix;
                            suffix *= phis[i];
                            match &plan.vars[i] {
                                Var::Fact { .. } => {
                                    run.fact_grads[i] += if digits[i] == 1 { loo } else { -loo };
                                }
                                Var::Neural { .. } => {
                                    let e = &mut run.entries[slots[i].expect("evaluated")];
                                    if e.upstream.len() == 1 {
                                        e.upstream[0] += if digits[i] == 1 { loo } else { -loo };
                                    } else {
                                        e.upstream[digits[i]] += loo;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for (d, &r) in digits.iter_mut().zip(&radix) {
                *d += 1;
                if *d < r {
                    break;
                }
                *d = 0;
            }
        }
        Ok(run)
    }

    #[allow(clippy::too_many_arguments)]
    fn neural(
        &self,
        plan: &QueryPlan,
        slot: usize,
        truth: &[bool],
        store: &ParamStore,
        use_cache: bool,
        cache: &EmbedCache,
        lookup: &mut HashMap<(GraphKey, usize), usize>,
        run: &mut Run,
    ) -> Result<usize, EngineError> {
        let pg = &plan.gnns[slot];
        let g = &self.gnn[pg.fact];
        let key = GraphKey {
            model: g.model,
            nodes: g.nodes,
            atoms: pg.gamma.iter().filter(|(l, _)| truth[*l]).map(|(_, id)| *id).collect(),
        };
        if use_cache {
            if let Some(&i) = lookup.get(&(key.clone(), pg.fact)) {
                return Ok(i);
            }
            // Facts sharing graph and targets share the evaluation.
            if let Some(i) = run
                .entries
                .iter()
                .position(|e| e.key == key && self.gnn[e.fact].targets == g.targets)
            {
                lookup.insert((key, pg.fact), i);
                return Ok(i);
            }
        }
        let id = &self.models[g.model];
        let cfg = &self.configs[id];
        let params = store.models.get(id).ok_or_else(|| EngineError::MissingModel(id.clone()))?;
        let cached = if use_cache {
            cache.map.read().expect("cache lock").get(&key).cloned()
        } else {
            None
        };
        let emb = match cached {
            Some(e) => e,
            None => {
                let graph = self.graph_of(pg.fact, &key.atoms);
                let e = Arc::new(embed(cfg, params, &GraphInput::new(&graph, cfg)?));
                if use_cache {
                    cache.map.write().expect("cache lock").entry(key.clone()).or_insert_with(|| e.clone());
                }
                e
            }
        };
        let trace = readout(cfg, params, &emb, &g.targets)?;
        run.evaluations += 1;
        let k = trace.output.len();
        run.entries.push(Entry {
            key: key.clone(),
            fact: pg.fact,
            emb,
            trace,
            upstream: vec![0.0; k],
        });
        let i = run.entries.len() - 1;
        if use_cache {
            lookup.insert((key, pg.fact), i);
        }
        Ok(i)
    }

    /// Induced graph of a neural fact given the ids of its true atoms.
    fn graph_of(&self, fact: usize, true_atoms: &[u32]) -> LabelledGraph {
        let g = &self.gnn[fact];
        let mut graph = LabelledGraph::new(self.node_lists[g.nodes].iter().cloned());
        for (id, part) in g.gamma.iter() {
            if true_atoms.binary_search(&(*id as u32)).is_err() {
                continue;
            }
            match part {
                GammaPart::Label(v, l) => graph.add_label_at(*v, l.clone()),
                GammaPart::Edge(u, l, v) => graph.add_edge_at(*u, l.clone(), *v),
            }
        }
        graph
    }
}

fn forward_chain(plan: &QueryPlan, truth: &mut [bool], remaining: &mut [usize], queue: &mut Vec<usize>) {
    for (i, (h, body)) in plan.rules.iter().enumerate() {
        remaining[i] = body.len();
        if body.is_empty() && !truth[*h] {
            truth[*h] = true;
        }
    }
    queue.extend((0..truth.len()).filter(|&a| truth[a]));
    while let Some(a) = queue.pop() {
        for &r in &plan.watchers[a] {
            let (h, body) = &plan.rules[r];
            let dup = body.iter().filter(|&&b| b == a).count();
            remaining[r] -= dup.min(remaining[r]);
            if remaining[r] == 0 && !truth[*h] {
                truth[*h] = true;
                queue.push(*h);
            }
        }
    }
}
