use rayon::prelude::*;

use crate::engine::{EmbedCache, Engine, EngineError, Gradient, QueryPlan};
use crate::logic::Atom;

use super::ParamStore;

pub const CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub query: Atom,
    pub target: f64,
    pub weight: f64,
}

impl TrainingExample {
    pub fn new(query: Atom, target: f64) -> Self {
        TrainingExample {
            query,
            target,
            weight: 1.0,
        }
    }
}

/// Examples with their query plans, built once and reused every epoch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub examples: Vec<TrainingExample>,
    plans: Vec<QueryPlan>,
}

impl Batch {
    pub fn new(engine: &Engine, examples: Vec<TrainingExample>, cap: usize) -> Result<Self, EngineError> {
        let plans = examples
            .iter()
            .map(|e| engine.plan(&e.query, None, cap))
            .collect::<Result<_, _>>()?;
        Ok(Batch { examples, plans })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Batch {
        Batch {
            examples: idx.iter().map(|&i| self.examples[i].clone()).collect(),
            plans: idx.iter().map(|&i| self.plans[i].clone()).collect(),
        }
    }

    pub fn plans(&self) -> &[QueryPlan] {
        &self.plans
    }
}

/// Cross-entropy of `p` against `target`, clamped inside the logarithm.
pub fn bce(p: f64, target: f64) -> f64 {
    let c = p.clamp(CLAMP, 1.0 - CLAMP);
    -(target * c.ln() + (1.0 - target) * (1.0 - c).ln())
}

/// d bce / dp; zero where the clamp is active.
pub fn bce_grad(p: f64, target: f64) -> f64 {
    if !(CLAMP..=1.0 - CLAMP).contains(&p) {
        return 0.0;
    }
    -target / p + (1.0 - target) / (1.0 - p)
}

fn total_weight(batch: &Batch) -> f64 {
    batch.examples.iter().map(|e| e.weight).sum()
}

/// Weighted mean cross-entropy between query marginals and targets.
pub fn loss(batch: &Batch, engine: &Engine, store: &ParamStore) -> Result<f64, EngineError> {
    let opts = crate::engine::InferenceOptions {
        cap: usize::MAX,
        cache: true,
    };
    let terms: Vec<f64> = batch
        .plans
        .par_iter()
        .zip(&batch.examples)
        .map(|(plan, ex)| {
            let p = engine.evaluate(plan, store, &opts)?.probability;
            Ok(ex.weight * bce(p, ex.target))
        })
        .collect::<Result<_, EngineError>>()?;
    Ok(terms.iter().sum::<f64>() / total_weight(batch))
}

/// Loss and its exact gradient over every entry of `store`.
pub fn grad(batch: &Batch, engine: &Engine, store: &ParamStore) -> Result<(f64, ParamStore), EngineError> {
    let total = total_weight(batch);
    let cache = EmbedCache::new();
    let parts: Vec<(f64, Gradient)> = batch
        .plans
        .par_iter()
        .zip(&batch.examples)
        .map(|(plan, ex)| {
            let pg = engine.marginal_grad(plan, store, &cache)?;
            let p = pg.probability;
            let mut g = Gradient::zeros(store);
            let scale = ex.weight / total * bce_grad(p, ex.target);
            if scale != 0.0 {
                pg.accumulate(engine, store, scale, &mut g)?;
            }
            Ok((ex.weight * bce(p, ex.target), g))
        })
        .collect::<Result<_, EngineError>>()?;
    let mut loss = 0.0;
    let mut acc = Gradient::zeros(store);
    for (l, g) in parts {
        loss += l;
        acc.merge(g);
    }
    Ok((loss / total, acc.finish(engine, store)?))
}
