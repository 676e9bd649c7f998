use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::dsl::CheckedProgram;
use crate::gnn::{sigmoid, snapshot_from_json, snapshot_to_json, GnnConfig, ParamTensors, Snapshot};

/// Every learnable quantity: fact logits and network weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    pub fact_logits: BTreeMap<String, f64>,
    pub models: Snapshot,
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl ParamStore {
    /// Logits from the declared initial values; network weights drawn from
    /// a generator seeded with `seed`, models visited in id order.
    pub fn init(p: &CheckedProgram, seed: u64) -> Self {
        let fact_logits = p
            .prob_facts
            .iter()
            .filter(|f| f.learnable)
            .filter_map(|f| f.param_id.clone().map(|id| (id, logit(f.prob))))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let models = p
            .configs
            .iter()
            .map(|(id, cfg)| (id.clone(), ParamTensors::init(cfg, &mut rng)))
            .collect();
        ParamStore {
            fact_logits,
            models,
        }
    }

    pub fn zeros_like(&self) -> Self {
        ParamStore {
            fact_logits: self.fact_logits.keys().map(|k| (k.clone(), 0.0)).collect(),
            models: self.models.iter().map(|(k, m)| (k.clone(), m.zeros_like())).collect(),
        }
    }

    pub fn prob(&self, param_id: &str) -> Option<f64> {
        self.fact_logits.get(param_id).map(|&z| sigmoid(z))
    }

    pub fn add_scaled(&mut self, other: &ParamStore, scale: f64) {
        for (k, v) in &other.fact_logits {
            *self.fact_logits.entry(k.clone()).or_insert(0.0) += scale * v;
        }
        for (k, m) in &other.models {
            match self.models.get_mut(k) {
                Some(mine) => mine.add_scaled(m, scale),
                None => {
                    let mut z = m.zeros_like();
                    z.add_scaled(m, scale);
                    self.models.insert(k.clone(), z);
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.fact_logits.values_mut().for_each(|v| *v *= s);
        for m in self.models.values_mut() {
            m.visit_mut(|v| *v *= s);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.fact_logits.values().map(|v| v * v).sum::<f64>()
            + self.models.values().map(ParamTensors::sq_norm).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.fact_logits.values().all(|v| v.is_finite()) && self.models.values().all(|m| m.is_finite())
    }

    /// Flattened view in a fixed order: fact logits by id, then models by id.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.fact_logits.values().copied().collect();
        for m in self.models.values() {
            out.extend(m.to_flat());
        }
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut i = 0;
        for v in self.fact_logits.values_mut() {
            *v = values[i];
            i += 1;
        }
        for m in self.models.values_mut() {
            let n = m.scalar_count();
            m.set_flat(&values[i..i + n]);
            i += n;
        }
    }

    pub fn to_json(&self) -> Value {
        let facts: Map<String, Value> = self
            .fact_logits
            .iter()
            .map(|(k, v)| (k.clone(), Value::from(*v)))
            .collect();
        let mut obj = Map::new();
        obj.insert("facts".into(), Value::Object(facts));
        obj.insert("models".into(), snapshot_to_json(&self.models));
        Value::Object(obj)
    }

    pub fn from_json(configs: &BTreeMap<String, GnnConfig>, v: &Value) -> Result<Self, String> {
        let facts = v
            .get("facts")
            .and_then(Value::as_object)
            .ok_or("missing `facts` object")?;
        let mut fact_logits = BTreeMap::new();
        for (k, x) in facts {
            let z = x
                .as_f64()
                .filter(|z| z.is_finite())
                .ok_or_else(|| format!("fact `{k}` is not a finite number"))?;
            fact_logits.insert(k.clone(), z);
        }
        let models = snapshot_from_json(configs, v.get("models").unwrap_or(&Value::Null))
            .map_err(|e| e.to_string())?;
        Ok(ParamStore {
            fact_logits,
            models,
        })
    }
}
