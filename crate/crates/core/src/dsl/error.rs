use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at '{found}': {message}")]
    Syntax {
        pos: Pos,
        found: String,
        message: String,
    },
    #[error("arity conflict: {message}")]
    ArityConflict { pos: Option<Pos>, message: String },
    #[error("duplicate declaration of {what}")]
    Duplicate { pos: Option<Pos>, what: String },
    #[error("probability {value} of {atom} is outside {range}")]
    InvalidProbability {
        pos: Option<Pos>,
        atom: String,
        value: f64,
        range: &'static str,
    },
    #[error("{what} must be ground")]
    NonGround { pos: Option<Pos>, what: String },
    #[error("unbound variable {var} in {context}")]
    UnboundVariable {
        pos: Option<Pos>,
        var: String,
        context: String,
    },
    #[error("unknown model '{model}'")]
    UnknownModel { pos: Option<Pos>, model: String },
    #[error("stratification cycle: {}", cycle.join(" -> "))]
    StratificationCycle { cycle: Vec<String> },
    #[error("invalid graph specification: {message}")]
    InvalidGamma { pos: Option<Pos>, message: String },
    #[error("model '{model}': {message}")]
    ModelMismatch {
        pos: Option<Pos>,
        model: String,
        message: String,
    },
}

impl DslError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            DslError::Syntax { pos, .. } => Some(*pos),
            DslError::ArityConflict { pos, .. }
            | DslError::Duplicate { pos, .. }
            | DslError::InvalidProbability { pos, .. }
            | DslError::NonGround { pos, .. }
            | DslError::UnboundVariable { pos, .. }
            | DslError::UnknownModel { pos, .. }
            | DslError::InvalidGamma { pos, .. }
            | DslError::ModelMismatch { pos, .. } => *pos,
            DslError::StratificationCycle { .. } => None,
        }
    }

    /// `file:line:col: error: message`
    pub fn diagnostic(&self, file: &str) -> String {
        let pos = self.pos().unwrap_or(Pos { line: 1, col: 1 });
        format!("{file}:{}:{}: error: {self}", pos.line, pos.col)
    }
}
