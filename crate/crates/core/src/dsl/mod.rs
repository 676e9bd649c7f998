//! Lexing, parsing, printing and validation of `.dgl` programs.

mod error;
mod lexer;
mod parser;
mod program;
mod validate;

pub use error::{DslError, Pos};
pub use parser::{parse, parse_atom};
pub use program::{CheckedProgram, GammaItem, GnnFactSchema, ModelDecl, ProbFact, Program, SourceMap};
pub use validate::validate;

pub(crate) use validate::find_cycle;

/// Parses and validates in one step.
pub fn load(source: &str) -> Result<CheckedProgram, DslError> {
    validate(parse(source)?)
}
