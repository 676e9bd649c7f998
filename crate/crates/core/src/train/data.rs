use std::io::Read;

use crate::dsl::parse_atom;

use super::loss::TrainingExample;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct DataError {
    pub line: usize,
    pub message: String,
}

/// Reads `query,target,weight` rows; an empty weight means 1.
pub fn read_examples<R: Read>(input: R) -> Result<Vec<TrainingExample>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| DataError { line: 1, message: e.to_string() })?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 2 || cols[0] != "query" || cols[1] != "target" || cols.get(2).is_some_and(|c| *c != "weight") {
        return Err(DataError {
            line: 1,
            message: "expected header `query,target,weight`".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let err = |message: String| DataError { line, message };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let query = parse_atom(rec.get(0).unwrap_or("")).map_err(|e| err(e.to_string()))?;
        if !query.is_ground() {
            return Err(err(format!("query {query} is not ground")));
        }
        let target: f64 = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| err("target is not a number".into()))?;
        if !(0.0..=1.0).contains(&target) {
            return Err(err(format!("target {target} outside [0,1]")));
        }
        let weight = match rec.get(2).filter(|w| !w.is_empty()) {
            None => 1.0,
            Some(w) => w.parse().map_err(|_| err("weight is not a number".into()))?,
        };
        if !(weight > 0.0 && f64::is_finite(weight)) {
            return Err(err(format!("weight {weight} must be positive")));
        }
        out.push(TrainingExample { query, target, weight });
    }
    Ok(out)
}

/// Inverse of [`read_examples`].
pub fn write_examples(examples: &[TrainingExample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["query", "target", "weight"]).expect("in-memory write");
    for e in examples {
        w.write_record([e.query.to_string(), e.target.to_string(), e.weight.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}
