//! Relational graph convolution stack with a perceptron readout.
//!
//! Layer update for vertex v:
//!
//! ```text
//! h_v' = relu(W_self h_v + Σ_rel W_rel · mean{h_u : (u, rel, v) ∈ E})
//! ```
//!
//! Messages travel source → target only. The mean over an empty
//! neighbourhood is zero. Gradients are closed-form backpropagation through
//! this fixed layer set.

use super::config::{GnnConfig, Readout};
use super::graph::LabelledGraph;
use super::params::ParamTensors;
use super::GnnError;

/// Multi-hot vertex labels plus a constant bias slot.
pub fn encode_features(g: &LabelledGraph, cfg: &GnnConfig) -> Result<Vec<Vec<f64>>, GnnError> {
    (0..g.len())
        .map(|v| {
            let mut x = vec![0.0; cfg.input_dim()];
            for l in g.labels(v) {
                let i = cfg
                    .vertex_labels
                    .iter()
                    .position(|k| k == l)
                    .ok_or_else(|| GnnError::UnknownLabel(l.clone()))?;
                x[i] = 1.0;
            }
            x[cfg.vertex_labels.len()] = 1.0;
            Ok(x)
        })
        .collect()
}

/// Graph compiled against a configuration: features and in-neighbour lists.
#[derive(Debug, Clone)]
pub struct GraphInput {
    n: usize,
    features: Vec<f64>,
    /// relation → target vertex → source vertices
    in_edges: Vec<Vec<Vec<usize>>>,
}

impl GraphInput {
    pub fn new(g: &LabelledGraph, cfg: &GnnConfig) -> Result<Self, GnnError> {
        let n = g.len();
        let features = encode_features(g, cfg)?.concat();
        let mut in_edges = vec![vec![Vec::new(); n]; cfg.relations.len()];
        for (u, label, v) in g.edges() {
            let r = cfg
                .relation_index(label)
                .ok_or_else(|| GnnError::UnknownRelation(label.to_string()))?;
            in_edges[r][v].push(u);
        }
        Ok(GraphInput {
            n,
            features,
            in_edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }
}

/// Activations of the message-passing stack, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Embedding {
    n: usize,
    in_edges: Vec<Vec<Vec<usize>>>,
    /// layer → flattened n × d_l inputs
    inputs: Vec<Vec<f64>>,
    /// layer → relation → flattened n × d_l neighbour means
    aggs: Vec<Vec<Vec<f64>>>,
    /// layer → flattened n × hidden pre-activations
    pres: Vec<Vec<f64>>,
    /// flattened n × hidden final embeddings
    out: Vec<f64>,
    hidden: usize,
}

impl Embedding {
    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.out[v * self.hidden..(v + 1) * self.hidden]
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }
}

pub fn embed(cfg: &GnnConfig, params: &ParamTensors, g: &GraphInput) -> Embedding {
    let n = g.n;
    let h = cfg.hidden_dim;
    let mut current = g.features.clone();
    let mut inputs = Vec::with_capacity(cfg.num_layers);
    let mut aggs = Vec::with_capacity(cfg.num_layers);
    let mut pres = Vec::with_capacity(cfg.num_layers);
    for (l, lp) in params.layers.iter().enumerate() {
        let d = cfg.layer_input_dim(l);
        let mut layer_aggs = Vec::with_capacity(cfg.relations.len());
        for sources in &g.in_edges {
            let mut agg = vec![0.0; n * d];
            for (v, srcs) in sources.iter().enumerate() {
                if srcs.is_empty() {
                    continue;
                }
                let inv = 1.0 / srcs.len() as f64;
                let dst = &mut agg[v * d..(v + 1) * d];
                for &u in srcs {
                    for (a, x) in dst.iter_mut().zip(&current[u * d..(u + 1) * d]) {
                        *a += x;
                    }
                }
                dst.iter_mut().for_each(|a| *a *= inv);
            }
            layer_aggs.push(agg);
        }
        let mut pre = vec![0.0; n * h];
        for v in 0..n {
            let out = &mut pre[v * h..(v + 1) * h];
            lp.self_weight.matvec_acc(&current[v * d..(v + 1) * d], out);
            for (w, agg) in lp.relation_weights.iter().zip(&layer_aggs) {
                w.matvec_acc(&agg[v * d..(v + 1) * d], out);
            }
        }
        let next: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        inputs.push(std::mem::replace(&mut current, next));
        aggs.push(layer_aggs);
        pres.push(pre);
    }
    Embedding {
        n,
        in_edges: g.in_edges.clone(),
        inputs,
        aggs,
        pres,
        out: current,
        hidden: h,
    }
}

#[derive(Debug, Clone)]
pub struct ReadoutTrace {
    targets: Vec<usize>,
    input: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden_act: Vec<f64>,
    pub output: Vec<f64>,
}

pub fn readout(
    cfg: &GnnConfig,
    params: &ParamTensors,
    emb: &Embedding,
    targets: &[usize],
) -> Result<ReadoutTrace, GnnError> {
    if targets.len() != cfg.readout.target_count() {
        return Err(GnnError::TargetCount {
            expected: cfg.readout.target_count(),
            got: targets.len(),
        });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= emb.n) {
        return Err(GnnError::MissingTarget(format!("vertex index {t}")));
    }
    let h = cfg.hidden_dim;
    let input = match cfg.readout {
        Readout::Node => emb.vertex(targets[0]).to_vec(),
        Readout::Edge => [emb.vertex(targets[0]), emb.vertex(targets[1])].concat(),
        Readout::Graph => {
            let mut m = vec![0.0; h];
            if emb.n > 0 {
                for v in 0..emb.n {
                    for (a, x) in m.iter_mut().zip(emb.vertex(v)) {
                        *a += x;
                    }
                }
                let inv = 1.0 / emb.n as f64;
                m.iter_mut().for_each(|a| *a *= inv);
            }
            m
        }
    };
    let rp = &params.readout;
    let mut hidden_pre = rp.hidden_bias.data().to_vec();
    rp.hidden_weight.matvec_acc(&input, &mut hidden_pre);
    let hidden_act: Vec<f64> = hidden_pre.iter().map(|&z| z.max(0.0)).collect();
    let mut logits = rp.out_bias.data().to_vec();
    rp.out_weight.matvec_acc(&hidden_act, &mut logits);
    let output = if cfg.output_arity == 1 {
        vec![sigmoid(logits[0])]
    } else {
        softmax(&logits)
    };
    Ok(ReadoutTrace {
        targets: targets.to_vec(),
        input,
        hidden_pre,
        hidden_act,
        output,
    })
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Backpropagates `upstream` (∂L/∂output) through the readout. Accumulates
/// readout gradients into `grads` and returns ∂L/∂embedding (n × hidden).
pub fn backward_readout(
    cfg: &GnnConfig,
    params: &ParamTensors,
    emb: &Embedding,
    trace: &ReadoutTrace,
    upstream: &[f64],
    grads: &mut ParamTensors,
    d_emb: &mut [f64],
) -> Result<(), GnnError> {
    if upstream.len() != trace.output.len() || d_emb.len() != emb.n * cfg.hidden_dim {
        return Err(GnnError::ShapeMismatch);
    }
    let p = &trace.output;
    let d_logits: Vec<f64> = if cfg.output_arity == 1 {
        vec![upstream[0] * p[0] * (1.0 - p[0])]
    } else {
        let dot: f64 = upstream.iter().zip(p).map(|(g, q)| g * q).sum();
        p.iter().zip(upstream).map(|(q, g)| q * (g - dot)).collect()
    };
    let rp = &params.readout;
    let gr = &mut grads.readout;
    gr.out_weight.add_outer(&d_logits, &trace.hidden_act, 1.0);
    gr.out_bias.add_scaled(&col(&d_logits), 1.0);
    let mut d_act = vec![0.0; cfg.hidden_dim];
    rp.out_weight.matvec_t_acc(&d_logits, &mut d_act);
    let d_pre: Vec<f64> = d_act
        .iter()
        .zip(&trace.hidden_pre)
        .map(|(g, &z)| if z > 0.0 { *g } else { 0.0 })
        .collect();
    gr.hidden_weight.add_outer(&d_pre, &trace.input, 1.0);
    gr.hidden_bias.add_scaled(&col(&d_pre), 1.0);
    let mut d_in = vec![0.0; cfg.readout_input_dim()];
    rp.hidden_weight.matvec_t_acc(&d_pre, &mut d_in);

    let h = cfg.hidden_dim;
    match cfg.readout {
        Readout::Node => add_into(&mut d_emb[trace.targets[0] * h..][..h], &d_in),
        Readout::Edge => {
            add_into(&mut d_emb[trace.targets[0] * h..][..h], &d_in[..h]);
            add_into(&mut d_emb[trace.targets[1] * h..][..h], &d_in[h..]);
        }
        Readout::Graph => {
            if emb.n > 0 {
                let inv = 1.0 / emb.n as f64;
                let share: Vec<f64> = d_in.iter().map(|g| g * inv).collect();
                for v in 0..emb.n {
                    add_into(&mut d_emb[v * h..][..h], &share);
                }
            }
        }
    }
    Ok(())
}

/// Backpropagates ∂L/∂embedding through the message-passing stack.
pub fn backward_embed(
    cfg: &GnnConfig,
    params: &ParamTensors,
    emb: &Embedding,
    d_emb: Vec<f64>,
    grads: &mut ParamTensors,
) -> Result<(), GnnError> {
    let n = emb.n;
    let h = cfg.hidden_dim;
    if d_emb.len() != n * h || !params.same_shape(grads) {
        return Err(GnnError::ShapeMismatch);
    }
    let mut d_out = d_emb;
    for l in (0..params.layers.len()).rev() {
        let d = cfg.layer_input_dim(l);
        let lp = &params.layers[l];
        let gl = &mut grads.layers[l];
        let pre = &emb.pres[l];
        let d_pre: Vec<f64> = d_out
            .iter()
            .zip(pre)
            .map(|(g, &z)| if z > 0.0 { *g } else { 0.0 })
            .collect();
        let input = &emb.inputs[l];
        let mut d_in = vec![0.0; n * d];
        for v in 0..n {
            let dp = &d_pre[v * h..(v + 1) * h];
            if dp.iter().all(|x| *x == 0.0) {
                continue;
            }
            gl.self_weight.add_outer(dp, &input[v * d..(v + 1) * d], 1.0);
            lp.self_weight.matvec_t_acc(dp, &mut d_in[v * d..(v + 1) * d]);
            for (r, agg) in emb.aggs[l].iter().enumerate() {
                let srcs = &emb.in_edges[r][v];
                if srcs.is_empty() {
                    continue;
                }
                gl.relation_weights[r].add_outer(dp, &agg[v * d..(v + 1) * d], 1.0);
                let mut d_agg = vec![0.0; d];
                lp.relation_weights[r].matvec_t_acc(dp, &mut d_agg);
                let inv = 1.0 / srcs.len() as f64;
                for &u in srcs {
                    for (a, g) in d_in[u * d..(u + 1) * d].iter_mut().zip(&d_agg) {
                        *a += g * inv;
                    }
                }
            }
        }
        d_out = d_in;
    }
    Ok(())
}

fn col(v: &[f64]) -> super::tensor::Matrix {
    super::tensor::Matrix::from_rows(&v.iter().map(|x| vec![*x]).collect::<Vec<_>>())
        .expect("column vector")
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

/// Everything a forward pass retains for [`backward`].
#[derive(Debug, Clone)]
pub struct Trace {
    pub embedding: Embedding,
    pub readout: ReadoutTrace,
}

/// Runs the network on `g` with the named target vertices. Returns the
/// probability (sigmoid) or distribution (softmax) and the activation trace.
pub fn forward(
    cfg: &GnnConfig,
    params: &ParamTensors,
    g: &LabelledGraph,
    targets: &[&str],
) -> Result<(Vec<f64>, Trace), GnnError> {
    let idx: Vec<usize> = targets
        .iter()
        .map(|t| g.index_of(t).ok_or_else(|| GnnError::MissingTarget(t.to_string())))
        .collect::<Result<_, _>>()?;
    let input = GraphInput::new(g, cfg)?;
    let embedding = embed(cfg, params, &input);
    let ro = readout(cfg, params, &embedding, &idx)?;
    Ok((
        ro.output.clone(),
        Trace {
            embedding,
            readout: ro,
        },
    ))
}

/// Gradient of `upstream · output` with respect to every parameter.
pub fn backward(
    cfg: &GnnConfig,
    params: &ParamTensors,
    trace: &Trace,
    upstream: &[f64],
) -> Result<ParamTensors, GnnError> {
    let mut grads = params.zeros_like();
    let mut d_emb = vec![0.0; trace.embedding.n * cfg.hidden_dim];
    backward_readout(cfg, params, &trace.embedding, &trace.readout, upstream, &mut grads, &mut d_emb)?;
    backward_embed(cfg, params, &trace.embedding, d_emb, &mut grads)?;
    Ok(grads)
}
