use std::collections::BTreeMap;

use rand::Rng;
use serde_json::{Map, Value};

use super::config::GnnConfig;
use super::tensor::Matrix;
use super::GnnError;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub self_weight: Matrix,
    /// Aligned with the configuration's relation list.
    pub relation_weights: Vec<Matrix>,
}

/// Two-layer perceptron applied to the readout vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutParams {
    pub hidden_weight: Matrix,
    pub hidden_bias: Matrix,
    pub out_weight: Matrix,
    pub out_bias: Matrix,
}

/// All weights of one network. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensors {
    pub relations: Vec<String>,
    pub layers: Vec<LayerParams>,
    pub readout: ReadoutParams,
}

impl ParamTensors {
    pub fn zeros(cfg: &GnnConfig) -> Self {
        Self::build(cfg, &mut |r, c, _| Matrix::zeros(r, c))
    }

    pub fn init<R: Rng>(cfg: &GnnConfig, rng: &mut R) -> Self {
        Self::build(cfg, &mut |r, c, fan_in| Matrix::uniform(r, c, fan_in, rng))
    }

    fn build(cfg: &GnnConfig, make: &mut dyn FnMut(usize, usize, usize) -> Matrix) -> Self {
        let h = cfg.hidden_dim;
        let layers = (0..cfg.num_layers)
            .map(|l| {
                let d = cfg.layer_input_dim(l);
                LayerParams {
                    self_weight: make(h, d, d),
                    relation_weights: cfg.relations.iter().map(|_| make(h, d, d)).collect(),
                }
            })
            .collect();
        let r = cfg.readout_input_dim();
        let readout = ReadoutParams {
            hidden_weight: make(h, r, r),
            hidden_bias: make(h, 1, r),
            out_weight: make(cfg.output_arity, h, h),
            out_bias: make(cfg.output_arity, 1, h),
        };
        ParamTensors {
            relations: cfg.relations.clone(),
            layers,
            readout,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.visit_mut(|v| *v = 0.0);
        z
    }

    fn matrices(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.self_weight);
            out.extend(l.relation_weights.iter());
        }
        let r = &self.readout;
        out.extend([&r.hidden_weight, &r.hidden_bias, &r.out_weight, &r.out_bias]);
        out
    }

    fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.self_weight);
            out.extend(l.relation_weights.iter_mut());
        }
        let r = &mut self.readout;
        out.extend([
            &mut r.hidden_weight,
            &mut r.hidden_bias,
            &mut r.out_weight,
            &mut r.out_bias,
        ]);
        out
    }

    /// Visits every scalar in a fixed order.
    pub fn visit(&self, mut f: impl FnMut(f64)) {
        for m in self.matrices() {
            m.data().iter().for_each(|v| f(*v));
        }
    }

    pub fn visit_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for m in self.matrices_mut() {
            m.data_mut().iter_mut().for_each(&mut f);
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scalar_count());
        self.visit(|v| out.push(v));
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        self.visit_mut(|v| *v = *it.next().expect("flat vector too short"));
    }

    pub fn scalar_count(&self) -> usize {
        self.matrices().iter().map(|m| m.data().len()).sum()
    }

    pub fn add_scaled(&mut self, other: &ParamTensors, scale: f64) {
        let theirs = other.matrices();
        for (m, o) in self.matrices_mut().into_iter().zip(theirs) {
            m.add_scaled(o, scale);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit(|v| s += v * v);
        s
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.is_finite())
    }

    pub fn same_shape(&self, other: &ParamTensors) -> bool {
        let a = self.matrices();
        let b = other.matrices();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.shape() == y.shape())
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        for (i, l) in self.layers.iter().enumerate() {
            let rels: Map<String, Value> = self
                .relations
                .iter()
                .zip(&l.relation_weights)
                .map(|(name, m)| (name.clone(), matrix_json(m)))
                .collect();
            let mut layer = Map::new();
            layer.insert("self".into(), matrix_json(&l.self_weight));
            layer.insert("relations".into(), Value::Object(rels));
            obj.insert(i.to_string(), Value::Object(layer));
        }
        let r = &self.readout;
        let mut ro = Map::new();
        ro.insert("hidden_weight".into(), matrix_json(&r.hidden_weight));
        ro.insert("hidden_bias".into(), matrix_json(&r.hidden_bias));
        ro.insert("out_weight".into(), matrix_json(&r.out_weight));
        ro.insert("out_bias".into(), matrix_json(&r.out_bias));
        obj.insert("readout".into(), Value::Object(ro));
        Value::Object(obj)
    }

    /// Reads a snapshot entry and checks its shapes against `cfg`.
    pub fn from_json(cfg: &GnnConfig, v: &Value) -> Result<Self, GnnError> {
        let bad = |m: &str| GnnError::Snapshot(format!("{}: {m}", cfg.model_id));
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        let mut p = ParamTensors::zeros(cfg);
        for (i, layer) in p.layers.iter_mut().enumerate() {
            let lv = obj
                .get(&i.to_string())
                .and_then(Value::as_object)
                .ok_or_else(|| bad(&format!("missing layer {i}")))?;
            layer.self_weight = read_matrix(lv.get("self"), layer.self_weight.shape())
                .ok_or_else(|| bad(&format!("layer {i} self weight")))?;
            let rels = lv
                .get("relations")
                .and_then(Value::as_object)
                .ok_or_else(|| bad(&format!("layer {i} relations")))?;
            for (name, m) in cfg.relations.iter().zip(layer.relation_weights.iter_mut()) {
                *m = read_matrix(rels.get(name), m.shape())
                    .ok_or_else(|| bad(&format!("layer {i} relation {name}")))?;
            }
        }
        let ro = obj
            .get("readout")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing readout"))?;
        let r = &mut p.readout;
        for (key, m) in [
            ("hidden_weight", &mut r.hidden_weight),
            ("hidden_bias", &mut r.hidden_bias),
            ("out_weight", &mut r.out_weight),
            ("out_bias", &mut r.out_bias),
        ] {
            *m = read_matrix(ro.get(key), m.shape()).ok_or_else(|| bad(key))?;
        }
        if !p.is_finite() {
            return Err(bad("non-finite entry"));
        }
        Ok(p)
    }
}

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|row| Value::Array(row.into_iter().map(Value::from).collect()))
            .collect(),
    )
}

fn read_matrix(v: Option<&Value>, shape: (usize, usize)) -> Option<Matrix> {
    let rows = v?.as_array()?;
    let parsed: Option<Vec<Vec<f64>>> = rows
        .iter()
        .map(|r| r.as_array()?.iter().map(Value::as_f64).collect())
        .collect();
    let m = Matrix::from_rows(&parsed?)?;
    (m.shape() == shape || (shape.0 == 0 && m.rows() == 0)).then_some(m)
}

/// Per-model parameters, keyed by model id.
pub type Snapshot = BTreeMap<String, ParamTensors>;

pub fn snapshot_to_json(s: &Snapshot) -> Value {
    Value::Object(s.iter().map(|(k, p)| (k.clone(), p.to_json())).collect())
}

pub fn snapshot_from_json(
    configs: &BTreeMap<String, GnnConfig>,
    v: &Value,
) -> Result<Snapshot, GnnError> {
    let obj = v
        .as_object()
        .ok_or_else(|| GnnError::Snapshot("expected an object of models".into()))?;
    let mut out = Snapshot::new();
    for (id, cfg) in configs {
        let entry = obj
            .get(id)
            .ok_or_else(|| GnnError::Snapshot(format!("missing model {id}")))?;
        out.insert(id.clone(), ParamTensors::from_json(cfg, entry)?);
    }
    Ok(out)
}
