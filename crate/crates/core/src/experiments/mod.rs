//! Desk-scale experiment analogs: dataset generators, program variants,
//! baselines and metrics.

mod blocks;
mod cycles;
mod family;
pub mod graphs;
mod metrics;
mod run;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{load, DslError};
use crate::engine::{Engine, EngineError, InferenceOptions};
use crate::logic::Atom;
use crate::train::{fit, Batch, FitOptions, ParamStore, TrainError, TrainReport, TrainingExample};

pub use blocks::{gen_e4, is_trap, one_move_tower, BlocksInstance, E4Data, Material};
pub use cycles::{gen_e1, gen_e2, E1Data, E2Data, GraphInstance, TEMPLATES};
pub use family::{gen_e3, Family, E3Data, Person};
pub use metrics::{accuracy, aggregate, aggregate_csv, auc, evaluate, f1, hits_at, MetricError, MetricReport, RankQuery};
pub use run::{run_e1, run_e2, run_e3, run_e4, run_experiment, run_once};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    E1,
    E2,
    E3,
    E4,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::E1 => "e1",
            Experiment::E2 => "e2",
            Experiment::E3 => "e3",
            Experiment::E4 => "e4",
        })
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "e1" => Ok(Experiment::E1),
            "e2" => Ok(Experiment::E2),
            "e3" => Ok(Experiment::E3),
            "e4" => Ok(Experiment::E4),
            other => Err(format!("unknown experiment `{other}` (expected e1, e2, e3 or e4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Sizes and training settings for one experiment run. Instance counts are
/// graphs (E1, E2), families (E3) or block configurations (E4).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub experiment: Experiment,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
}

impl DatasetSpec {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        let (train, test, epochs, learning_rate, hidden) = match experiment {
            Experiment::E1 => (100, 60, 150, 0.02, 12),
            Experiment::E2 => (200, 60, 150, 0.05, 8),
            Experiment::E3 => (96, 8, 150, 0.03, 16),
            Experiment::E4 => (24, 200, 150, 0.03, 10),
        };
        DatasetSpec {
            experiment,
            train,
            test,
            seed,
            epochs,
            learning_rate,
            hidden,
        }
    }

    /// Independent generator for one component of a run (data, weights,
    /// batch order, ...), split off the run seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    pub fn sub_seed(&self, stream: u64) -> u64 {
        self.rng(stream).next_u64()
    }

    pub fn fit_options(&self, stream: u64) -> FitOptions {
        FitOptions {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.sub_seed(stream),
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("generated program is invalid: {0}")]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A program trained against query supervision.
pub struct Trained {
    pub engine: Engine,
    pub store: ParamStore,
    pub report: TrainReport,
}

impl Trained {
    pub fn prob(&self, atom: &Atom) -> Result<f64, EngineError> {
        Ok(self.engine.marginal(atom, &self.store, &InferenceOptions::default())?.probability)
    }

    pub fn probs(&self, atoms: &[Atom]) -> Result<Vec<f64>, EngineError> {
        use rayon::prelude::*;
        atoms.par_iter().map(|a| self.prob(a)).collect()
    }
}

/// Loads `src`, initialises weights from `init_seed` and fits.
pub fn train_program(
    src: &str,
    examples: Vec<TrainingExample>,
    init_seed: u64,
    opts: &FitOptions,
) -> Result<Trained, ExperimentError> {
    let program = load(src)?;
    let engine = Engine::new(&program)?;
    let store = ParamStore::init(&program, init_seed);
    let batch = Batch::new(&engine, examples, crate::engine::DEFAULT_CAP)?;
    let (store, report) = fit(&batch, &engine, store, opts)?;
    Ok(Trained { engine, store, report })
}

pub(crate) fn atom(name: &str, args: &[&str]) -> Atom {
    Atom::ground(name, args)
}
