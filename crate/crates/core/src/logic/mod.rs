//! Logical syntax, unification, grounding and least-model semantics for
//! definite programs.

mod ground;
mod term;
mod unify;

pub use ground::{
    ground_program, minimal_model, relevant_facts, solve_conjunction, AtomIndex, RelevantFacts,
};
pub use term::{Atom, AtomUniverse, PredicateKey, Rule, Term};
pub use unify::{apply_subst, standardize_apart, unify, unify_extend, Substitution, Unifiable};
