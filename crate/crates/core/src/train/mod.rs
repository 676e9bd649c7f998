//! Learning fact probabilities and network weights from query supervision.

mod data;
mod fit;
mod loss;
mod store;

pub use data::{read_examples, write_examples, DataError};
pub use fit::{fit, EpochRecord, FitOptions, Optimizer, TrainError, TrainReport};
pub use loss::{bce, bce_grad, grad, loss, Batch, TrainingExample, CLAMP};
pub use store::{logit, ParamStore};

/// Runs `f` on a pool bounded by `DGL_THREADS` (unset or 0: all cores).
pub fn with_threads<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let n = std::env::var("DGL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
