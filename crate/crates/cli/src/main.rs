use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgl_core::dsl::{load, parse_atom, CheckedProgram};
use dgl_core::engine::{Engine, EngineError, InferenceOptions, DEFAULT_CAP};
use dgl_core::experiments::{run_experiment, Experiment, ExperimentError};
use dgl_core::train::{fit, read_examples, with_threads, Batch, FitOptions, Optimizer, ParamStore, TrainError};

#[derive(Parser)]
#[command(name = "dgl", version, about = "Probabilistic logic programs with graph neural facts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program.
    Check { file: PathBuf },
    /// Marginal or conditional probability of a ground atom, as JSON.
    Query {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        evidence: Option<String>,
        /// params.json written by `train`; default: initial values, seed 0.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Fit learnable facts and network weights to query supervision.
    Train {
        file: PathBuf,
        /// CSV with columns query,target,weight.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "adam")]
        optimizer: Optimizer,
        /// Mini-batch size; full batch when unset.
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// Record per-epoch wall time in log.csv.
        #[arg(long)]
        timing: bool,
    },
    /// Run one of the experiments e1..e4 for several seeds.
    Experiment {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Exit status and message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = if matches!(e, EngineError::CapExceeded { .. }) { 3 } else { 1 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn program(path: &Path) -> Result<(CheckedProgram, Engine), Failure> {
    let src = read(path)?;
    let p = load(&src).map_err(|e| Failure::domain(e.diagnostic(&path.display().to_string())))?;
    let engine = Engine::new(&p).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
    Ok((p, engine))
}

fn atom(text: &str) -> Result<dgl_core::logic::Atom, Failure> {
    parse_atom(text).map_err(|e| Failure::domain(e.diagnostic("<query>")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { file } => {
            let (p, engine) = program(&file)?;
            eprintln!(
                "{}: ok ({} facts, {} rules, {} ground graph neural facts)",
                file.display(),
                p.prob_facts.len(),
                p.rules.len(),
                engine.gnn_facts().len()
            );
            Ok(())
        }
        Command::Query {
            file,
            query,
            evidence,
            params,
            cap,
        } => {
            let (p, engine) = program(&file)?;
            let store = match params {
                Some(path) => {
                    let v: serde_json::Value =
                        serde_json::from_str(&read(&path)?).map_err(|e| Failure::io(&path, e))?;
                    ParamStore::from_json(&p.configs, &v).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?
                }
                None => ParamStore::init(&p, 0),
            };
            let q = atom(&query)?;
            let opts = InferenceOptions { cap, ..Default::default() };
            let result = with_threads(|| match evidence {
                Some(e) => atom(&e).and_then(|e| Ok(engine.conditional(&q, &e, &store, &opts)?)),
                None => Ok(engine.marginal(&q, &store, &opts)?),
            })?;
            println!("{}", serde_json::to_string(&result).expect("result serializes"));
            Ok(())
        }
        Command::Train {
            file,
            data,
            epochs,
            lr,
            seed,
            out,
            optimizer,
            batch_size,
            cap,
            timing,
        } => {
            let (p, engine) = program(&file)?;
            let csv = fs::File::open(&data).map_err(|e| Failure::io(&data, e))?;
            let examples = read_examples(csv).map_err(|e| Failure::domain(format!("{}:{}", data.display(), e)))?;
            let batch = Batch::new(&engine, examples, cap)?;
            let opts = FitOptions {
                epochs,
                learning_rate: lr,
                seed,
                optimizer,
                batch_size,
                ..FitOptions::default()
            };
            let store = ParamStore::init(&p, seed);
            let (store, report) = with_threads(|| fit(&batch, &engine, store, &opts)).map_err(|e| match e {
                TrainError::Engine(e) => Failure::from(e),
                other => Failure::domain(other),
            })?;
            fs::create_dir_all(&out).map_err(|e| Failure::io(&out, e))?;
            let json = serde_json::to_string_pretty(&store.to_json()).expect("params serialize");
            write(&out.join("params.json"), &(json + "\n"))?;
            write(&out.join("log.csv"), &report.to_csv(timing))?;
            if let Some(last) = report.epochs.last() {
                eprintln!("epoch {}: loss {:.6}", last.epoch, last.loss);
            }
            Ok(())
        }
        Command::Experiment { name, seed, reps, out } => {
            let exp: Experiment = name.parse().map_err(Failure::domain)?;
            let reports = with_threads(|| run_experiment(exp, seed, reps, &out)).map_err(|e| match e {
                ExperimentError::Io(err) => Failure::io(&out, err),
                ExperimentError::Engine(err) => Failure::from(err),
                other => Failure::domain(other),
            })?;
            eprintln!(
                "{exp}: {} run(s) written under {}",
                reports.len(),
                out.join("runs").join(exp.to_string()).display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
