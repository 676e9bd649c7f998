use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("no ground-truth labels to evaluate against")]
    EmptyTruth,
    #[error("{scores} scores for {truth} labels")]
    Length { scores: usize, truth: usize },
}

/// Named metric values in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<(String, f64)>,
}

impl MetricReport {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.rows.push((name.into(), value));
    }

    /// Appends `other` with every name prefixed by `prefix`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &MetricReport) {
        for (k, v) in &other.rows {
            self.push(format!("{prefix}{k}"), *v);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in &self.rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

/// Ranking problem for Hits@K: the score of one true item and the scores of
/// all candidates it competes with (the true item included).
#[derive(Debug, Clone, PartialEq)]
pub struct RankQuery {
    pub score: f64,
    pub candidates: Vec<f64>,
}

/// Accuracy at threshold 0.5, F1 on the positive class, AUC-ROC and Hits@K
/// for each K in `ks` (when ranking queries are given).
pub fn evaluate(scores: &[f64], truth: &[bool], ranks: &[RankQuery], ks: &[usize]) -> Result<MetricReport, MetricError> {
    if truth.is_empty() {
        return Err(MetricError::EmptyTruth);
    }
    if scores.len() != truth.len() {
        return Err(MetricError::Length {
            scores: scores.len(),
            truth: truth.len(),
        });
    }
    let mut r = MetricReport::default();
    r.push("accuracy", accuracy(scores, truth));
    r.push("f1", f1(scores, truth));
    r.push("auc", auc(scores, truth));
    if !ranks.is_empty() {
        for &k in ks {
            r.push(format!("hits@{k}"), hits_at(ranks, k));
        }
    }
    Ok(r)
}

pub fn accuracy(scores: &[f64], truth: &[bool]) -> f64 {
    let hit = scores.iter().zip(truth).filter(|(s, t)| (**s > 0.5) == **t).count();
    hit as f64 / truth.len() as f64
}

/// 2·TP / (2·TP + FP + FN); 1 when there are neither positives nor
/// positive predictions.
pub fn f1(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (s, t) in scores.iter().zip(truth) {
        match (*s > 0.5, *t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            _ => {}
        }
    }
    if tp + fp + fne == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fne) as f64
}

/// Mann-Whitney rank statistic with tied scores sharing their mean rank.
/// 0.5 when either class is absent.
pub fn auc(scores: &[f64], truth: &[bool]) -> f64 {
    let pos = truth.iter().filter(|t| **t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return 0.5;
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(truth).filter(|(_, t)| **t).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    u / (pos * neg) as f64
}

/// 1-based ascending ranks; ties get the mean of the ranks they span.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Fraction of queries whose true item ranks within the top `k`. Ties with
/// the true score count half, matching the tie-averaged rank.
pub fn hits_at(queries: &[RankQuery], k: usize) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let hits = queries
        .iter()
        .filter(|q| {
            let above = q.candidates.iter().filter(|c| **c > q.score).count() as f64;
            let tied = q.candidates.iter().filter(|c| **c == q.score).count() as f64;
            // the true item is among the tied candidates
            let rank = 1.0 + above + (tied - 1.0).max(0.0) / 2.0;
            rank <= k as f64
        })
        .count();
    hits as f64 / queries.len() as f64
}

/// Mean, sample standard deviation and count per metric, in first-seen
/// order across `runs`.
pub fn aggregate(runs: &[MetricReport]) -> Vec<(String, f64, f64, usize)> {
    let mut order: Vec<String> = Vec::new();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in runs {
        for (k, v) in &r.rows {
            if !values.contains_key(k) {
                order.push(k.clone());
            }
            values.entry(k.clone()).or_default().push(*v);
        }
    }
    order
        .into_iter()
        .map(|k| {
            let xs = &values[&k];
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            (k, mean, sd, n)
        })
        .collect()
}

pub fn aggregate_csv(runs: &[MetricReport]) -> String {
    let mut out = String::from("metric,mean,stddev,n\n");
    for (k, m, s, n) in aggregate(runs) {
        out.push_str(&format!("{k},{m},{s},{n}\n"));
    }
    out
}
