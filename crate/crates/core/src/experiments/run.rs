use std::fs;
use std::path::Path;

use super::blocks::gen_e4;
use super::cycles::{argmax, gen_e1, gen_e2, GraphInstance, CLASSES, TEMPLATES};
use super::family::gen_e3;
use super::metrics::{aggregate_csv, evaluate, MetricReport, RankQuery};
use super::{atom, train_program, DatasetSpec, Experiment, ExperimentError, Split, Trained};
use crate::train::TrainingExample;

fn train_examples(graphs: &[GraphInstance]) -> Vec<TrainingExample> {
    graphs.iter().filter(|g| g.split == Split::Train).flat_map(GraphInstance::examples).collect()
}

/// Fraction of test graphs whose most probable class is the true one.
fn class_accuracy(t: &Trained, graphs: &[GraphInstance]) -> Result<f64, ExperimentError> {
    let test: Vec<&GraphInstance> = graphs.iter().filter(|g| g.split == Split::Test).collect();
    let queries: Vec<_> = test.iter().flat_map(|g| g.queries()).collect();
    let probs = t.probs(&queries)?;
    let hits = test
        .iter()
        .zip(probs.chunks(CLASSES.len()))
        .filter(|(g, p)| argmax(p) == g.class)
        .count();
    Ok(hits as f64 / test.len().max(1) as f64)
}

fn wl_gap(t: &Trained) -> Result<f64, ExperimentError> {
    Ok(t.prob(&atom("classify", &["wl_g0", "class_0"]))? - t.prob(&atom("classify", &["wl_g1", "class_0"]))?)
}

fn write(dir: Option<&Path>, name: &str, text: &str) -> Result<(), ExperimentError> {
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join(name), text)?;
    }
    Ok(())
}

/// Logic at the top vs. at the bottom vs. a plain network.
pub fn run_e1(spec: &DatasetSpec, dir: Option<&Path>) -> Result<MetricReport, ExperimentError> {
    let data = gen_e1(spec);
    let examples = train_examples(&data.graphs);
    let mut r = MetricReport::default();
    for (name, src) in [("top", &data.top), ("bottom", &data.bottom), ("plain", &data.plain)] {
        write(dir, &format!("e1_{name}.dgl"), src)?;
        let t = train_program(src, examples.clone(), spec.sub_seed(1), &spec.fit_options(2))?;
        r.push(format!("{name}_accuracy"), class_accuracy(&t, &data.graphs)?);
        if name != "bottom" {
            r.push(format!("{name}_wl_gap"), wl_gap(&t)?);
        }
    }
    Ok(r)
}

/// Structure learning: which templates imply which class.
pub fn run_e2(spec: &DatasetSpec, dir: Option<&Path>) -> Result<MetricReport, ExperimentError> {
    let data = gen_e2(spec);
    write(dir, "e2.dgl", &data.program)?;
    let t = train_program(&data.program, train_examples(&data.graphs), spec.sub_seed(1), &spec.fit_options(2))?;
    let mut r = MetricReport::default();
    r.push("accuracy", class_accuracy(&t, &data.graphs)?);
    for tpl in TEMPLATES {
        for c in CLASSES {
            let p = t.store.prob(&format!("rF({tpl},{c})")).unwrap_or(f64::NAN);
            r.push(format!("p_rF_{tpl}_{c}"), p);
        }
    }
    Ok(r)
}

/// Scores of one relation over every ordered same-family pair of the test
/// families, plus ranking queries for each true edge.
fn relation_metrics(
    t: &Trained,
    data: &super::E3Data,
    head: &str,
    truth: impl Fn(&super::Family, usize, usize) -> bool,
    edge_only: bool,
) -> Result<MetricReport, ExperimentError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut ranks = Vec::new();
    for f in data.families.iter().filter(|f| f.split == Split::Test) {
        let pairs: Vec<(usize, usize)> = f.pairs().collect();
        let atoms: Vec<_> = pairs
            .iter()
            .map(|&(x, y)| atom(head, &[&f.persons[x].name, &f.persons[y].name]))
            .collect();
        let mut probs = t.probs(&atoms)?;
        if edge_only {
            for (p, &(x, y)) in probs.iter_mut().zip(&pairs) {
                if !f.parent_of.contains(&(x, y)) {
                    *p = 0.0;
                }
            }
        }
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let positive = truth(f, x, y);
            if positive {
                let candidates = pairs
                    .iter()
                    .zip(&probs)
                    .filter(|((a, _), _)| *a == x)
                    .map(|(_, p)| *p)
                    .collect();
                ranks.push(RankQuery {
                    score: probs[i],
                    candidates,
                });
            }
            labels.push(positive);
        }
        scores.extend(probs);
    }
    Ok(evaluate(&scores, &labels, &ranks, &[5, 20])?)
}

/// Distant supervision through the grandfather rules vs. a rule-free
/// network trained on grandfatherOf and read off on parent edges.
pub fn run_e3(spec: &DatasetSpec, dir: Option<&Path>) -> Result<MetricReport, ExperimentError> {
    let data = gen_e3(spec);
    write(dir, "e3.dgl", &data.program)?;
    write(dir, "e3_rules_only.dgl", &data.rules_only)?;
    write(dir, "e3_baseline.dgl", &data.baseline)?;
    let dgl = train_program(&data.program, data.train.clone(), spec.sub_seed(1), &spec.fit_options(2))?;
    let rules_only = train_program(&data.rules_only, data.train.clone(), spec.sub_seed(1), &spec.fit_options(2))?;
    let base = train_program(&data.baseline, data.train.clone(), spec.sub_seed(1), &spec.fit_options(2))?;
    let mut r = MetricReport::default();
    let father = |f: &super::Family, x, y| f.is_father(x, y);
    let mother = |f: &super::Family, x, y| f.is_mother(x, y);
    r.extend_prefixed("dgl_fatherOf_", &relation_metrics(&dgl, &data, "fatherOf", father, false)?);
    r.extend_prefixed("dgl_motherOf_", &relation_metrics(&dgl, &data, "motherOf", mother, false)?);
    r.extend_prefixed("rules_only_fatherOf_", &relation_metrics(&rules_only, &data, "fatherOf", father, false)?);
    r.extend_prefixed("rules_only_motherOf_", &relation_metrics(&rules_only, &data, "motherOf", mother, false)?);
    r.extend_prefixed("base_fatherOf_", &relation_metrics(&base, &data, "grandfatherOf", father, true)?);
    r.extend_prefixed("base_motherOf_", &relation_metrics(&base, &data, "grandfatherOf", mother, true)?);
    Ok(r)
}

/// Single network vs. two chained networks vs. the constrained pipeline.
pub fn run_e4(spec: &DatasetSpec, dir: Option<&Path>) -> Result<MetricReport, ExperimentError> {
    let data = gen_e4(spec);
    let train = data.examples(Split::Train);
    let test = data.examples(Split::Test);
    let mut r = MetricReport::default();
    let constrained: Vec<usize> = data
        .instances
        .iter()
        .enumerate()
        .filter(|(_, i)| i.split == Split::Test && i.no_legal_destination())
        .map(|(k, _)| k - spec.train)
        .collect();
    for (name, src) in [
        ("single", &data.single),
        ("unconstrained", &data.unconstrained),
        ("pipeline", &data.pipeline),
    ] {
        write(dir, &format!("e4_{name}.dgl"), src)?;
        let t = train_program(src, train.clone(), spec.sub_seed(1), &spec.fit_options(2))?;
        let queries: Vec<_> = test.iter().map(|e| e.query.clone()).collect();
        let probs = t.probs(&queries)?;
        let truth: Vec<bool> = test.iter().map(|e| e.target > 0.5).collect();
        r.push(format!("{name}_accuracy"), super::accuracy(&probs, &truth));
        if name == "pipeline" {
            let violations = constrained.iter().filter(|&&k| probs[k] > 0.0).count();
            r.push("pipeline_constraint_violations", violations as f64);
            r.push("constraint_instances", constrained.len() as f64);
        }
    }
    Ok(r)
}

/// Generates, trains and evaluates one seed; writes the generated programs
/// and `metrics.csv` into `dir` when given.
pub fn run_once(spec: &DatasetSpec, dir: Option<&Path>) -> Result<MetricReport, ExperimentError> {
    let r = match spec.experiment {
        Experiment::E1 => run_e1(spec, dir),
        Experiment::E2 => run_e2(spec, dir),
        Experiment::E3 => run_e3(spec, dir),
        Experiment::E4 => run_e4(spec, dir),
    }?;
    write(dir, "metrics.csv", &r.to_csv())?;
    Ok(r)
}

/// Seeds `seed .. seed + reps`, each under `out/runs/<exp>/<seed>/`, then
/// `out/runs/<exp>/aggregate.csv`.
pub fn run_experiment(
    experiment: Experiment,
    seed: u64,
    reps: usize,
    out: &Path,
) -> Result<Vec<MetricReport>, ExperimentError> {
    let base = out.join("runs").join(experiment.to_string());
    let mut reports = Vec::with_capacity(reps);
    for s in seed..seed + reps as u64 {
        let spec = DatasetSpec::new(experiment, s);
        reports.push(run_once(&spec, Some(&base.join(s.to_string())))?);
    }
    write(Some(&base), "aggregate.csv", &aggregate_csv(&reports))?;
    Ok(reports)
}
