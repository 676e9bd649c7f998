use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::gnn::{GnnConfig, Readout};
use crate::logic::{Atom, PredicateKey, Rule, Term};

use super::error::Pos;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbFact {
    pub atom: Atom,
    pub prob: f64,
    pub learnable: bool,
    pub param_id: Option<String>,
}

impl ProbFact {
    pub fn fixed(atom: Atom, prob: f64) -> Self {
        ProbFact {
            atom,
            prob,
            learnable: false,
            param_id: None,
        }
    }

    pub fn learnable(atom: Atom, init: f64) -> Self {
        ProbFact {
            param_id: Some(atom.to_string()),
            atom,
            prob: init,
            learnable: true,
        }
    }

    /// Deterministic facts take part in every world.
    pub fn is_certain(&self) -> bool {
        !self.learnable && (self.prob == 1.0 || self.prob == 0.0)
    }
}

/// One element of a graph specification.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GammaItem {
    Atom(Atom),
    /// `name/arity`: every atom of that predicate in the universe.
    Indicator(PredicateKey),
}

impl GammaItem {
    pub fn key(&self) -> PredicateKey {
        match self {
            GammaItem::Atom(a) => a.key(),
            GammaItem::Indicator(k) => k.clone(),
        }
    }
}

impl fmt::Display for GammaItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaItem::Atom(a) => write!(f, "{a}"),
            GammaItem::Indicator(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnFactSchema {
    pub model_id: String,
    pub gamma: Vec<GammaItem>,
    pub targets: Vec<Term>,
    pub head_group: Vec<Atom>,
    pub guard: Vec<Atom>,
}

impl GnnFactSchema {
    pub fn head_keys(&self) -> BTreeSet<PredicateKey> {
        self.head_group.iter().map(Atom::key).collect()
    }

    pub fn gamma_keys(&self) -> BTreeSet<PredicateKey> {
        self.gamma.iter().map(GammaItem::key).collect()
    }

    pub fn describe(&self) -> String {
        let heads: Vec<String> = self.head_group.iter().map(|h| h.key().to_string()).collect();
        heads.join(";")
    }
}

impl fmt::Display for GnnFactSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gnn({}, [", self.model_id)?;
        for (i, g) in self.gamma.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
        f.write_str("], [")?;
        for (i, t) in self.targets.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("])::")?;
        for (i, h) in self.head_group.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{h}")?;
        }
        if !self.guard.is_empty() {
            f.write_str(" :- ")?;
            for (i, g) in self.guard.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{g}")?;
            }
        }
        f.write_str(".")
    }
}

/// `#model(id, layers=N, hidden=H, readout=...)`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDecl {
    pub model_id: String,
    pub layers: usize,
    pub hidden: usize,
    pub readout: Readout,
}

impl fmt::Display for ModelDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#model({}, layers={}, hidden={}, readout={}).",
            self.model_id, self.layers, self.hidden, self.readout
        )
    }
}

/// Source positions of statements. Never part of structural equality.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub prob_facts: Vec<Pos>,
    pub rules: Vec<Pos>,
    pub gnn_schemas: Vec<Pos>,
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub prob_facts: Vec<ProbFact>,
    pub rules: Vec<Rule>,
    pub gnn_schemas: Vec<GnnFactSchema>,
    pub models: BTreeMap<String, ModelDecl>,
    pub queries: Vec<Atom>,
    pub evidence: Vec<Atom>,
    pub source: SourceMap,
}

impl Program {
    pub fn prob_fact_pos(&self, i: usize) -> Option<Pos> {
        self.source.prob_facts.get(i).copied()
    }

    pub fn rule_pos(&self, i: usize) -> Option<Pos> {
        self.source.rules.get(i).copied()
    }

    pub fn schema_pos(&self, i: usize) -> Option<Pos> {
        self.source.gnn_schemas.get(i).copied()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in self.models.values() {
            writeln!(f, "{m}")?;
        }
        for pf in &self.prob_facts {
            if pf.learnable {
                writeln!(f, "t({})::{}.", pf.prob, pf.atom)?;
            } else if pf.prob == 1.0 {
                writeln!(f, "{}.", pf.atom)?;
            } else {
                writeln!(f, "{}::{}.", pf.prob, pf.atom)?;
            }
        }
        for s in &self.gnn_schemas {
            writeln!(f, "{s}")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        for q in &self.queries {
            writeln!(f, "query({q}).")?;
        }
        for e in &self.evidence {
            writeln!(f, "evidence({e}).")?;
        }
        Ok(())
    }
}

/// A program that passed validation, with per-model network configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedProgram {
    pub program: Program,
    pub configs: BTreeMap<String, GnnConfig>,
}

impl std::ops::Deref for CheckedProgram {
    type Target = Program;

    fn deref(&self) -> &Program {
        &self.program
    }
}
