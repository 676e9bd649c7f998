use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{Engine, EngineError};

use super::loss::{grad, Batch};
use super::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!("unknown optimizer `{other}` (expected sgd or adam)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            epochs: 100,
            learning_rate: 0.01,
            seed: 0,
            optimizer: Optimizer::Adam,
            batch_size: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: f64,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub options: FitOptions,
    pub epochs: Vec<EpochRecord>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl TrainReport {
    /// Everything except timings, for reproducibility checks.
    pub fn same_trajectory(&self, other: &TrainReport) -> bool {
        self.options == other.options
            && self.epochs.len() == other.epochs.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.loss.to_bits() == b.loss.to_bits()
                    && a.grad_norm.to_bits() == b.grad_norm.to_bits()
            })
    }

    /// `epoch,loss,grad_norm,seconds`; seconds left empty unless `timing`.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from("epoch,loss,grad_norm,seconds\n");
        for r in &self.epochs {
            let secs = if timing { format!("{:.6}", r.seconds) } else { String::new() };
            out.push_str(&format!("{},{},{},{}\n", r.epoch, r.loss, r.grad_norm, secs));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { epoch: usize, what: &'static str },
    #[error("no training examples")]
    Empty,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// First-order training of every parameter in `store` against `train`.
pub fn fit(
    train: &Batch,
    engine: &Engine,
    store: ParamStore,
    opts: &FitOptions,
) -> Result<(ParamStore, TrainReport), TrainError> {
    if train.is_empty() {
        return Err(TrainError::Empty);
    }
    let start = Instant::now();
    let mut store = store;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let size = store.to_flat().len();
    let mut adam = Adam {
        m: vec![0.0; size],
        v: vec![0.0; size],
        t: 0,
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(opts.epochs);
    for epoch in 1..=opts.epochs {
        let t0 = Instant::now();
        let batches: Vec<Vec<usize>> = match opts.batch_size {
            Some(b) if b > 0 && b < train.len() => {
                order.shuffle(&mut rng);
                order.chunks(b).map(<[usize]>::to_vec).collect()
            }
            _ => vec![order.clone()],
        };
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        let mut weight_sum = 0.0;
        for idx in &batches {
            let sub;
            let batch = if batches.len() == 1 {
                train
            } else {
                sub = train.subset(idx);
                &sub
            };
            let (loss, mut g) = grad(batch, engine, &store)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFinite { epoch, what: "loss" });
            }
            let norm = g.sq_norm().sqrt();
            if !norm.is_finite() {
                return Err(TrainError::NonFinite { epoch, what: "gradient" });
            }
            if norm > opts.clip_norm {
                g.scale(opts.clip_norm / norm);
            }
            step(&mut store, &g, opts, &mut adam);
            if !store.is_finite() {
                return Err(TrainError::NonFinite { epoch, what: "parameter" });
            }
            let w: f64 = batch.examples.iter().map(|e| e.weight).sum();
            loss_sum += loss * w;
            norm_sum += norm;
            weight_sum += w;
        }
        epochs.push(EpochRecord {
            epoch,
            loss: loss_sum / weight_sum,
            grad_norm: norm_sum / batches.len() as f64,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok((
        store,
        TrainReport {
            options: opts.clone(),
            epochs,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

fn step(store: &mut ParamStore, g: &ParamStore, opts: &FitOptions, adam: &mut Adam) {
    let mut theta = store.to_flat();
    let grads = g.to_flat();
    match opts.optimizer {
        Optimizer::Sgd => {
            for (p, d) in theta.iter_mut().zip(&grads) {
                *p -= opts.learning_rate * d;
            }
        }
        Optimizer::Adam => {
            adam.t += 1;
            let c1 = 1.0 - opts.beta1.powi(adam.t);
            let c2 = 1.0 - opts.beta2.powi(adam.t);
            for i in 0..theta.len() {
                let d = grads[i];
                adam.m[i] = opts.beta1 * adam.m[i] + (1.0 - opts.beta1) * d;
                adam.v[i] = opts.beta2 * adam.v[i] + (1.0 - opts.beta2) * d * d;
                let mh = adam.m[i] / c1;
                let vh = adam.v[i] / c2;
                theta[i] -= opts.learning_rate * mh / (vh.sqrt() + opts.epsilon);
            }
        }
    }
    store.set_flat(&theta);
}
