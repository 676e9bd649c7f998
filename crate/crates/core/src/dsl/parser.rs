use std::collections::BTreeMap;

use crate::gnn::Readout;
use crate::logic::{Atom, PredicateKey, Rule, Term};

use super::error::{DslError, Pos};
use super::lexer::{tokenize, Tok, Token};
use super::program::{GammaItem, GnnFactSchema, ModelDecl, ProbFact, Program};

const DEFAULT_LAYERS: usize = 2;
const DEFAULT_HIDDEN: usize = 8;

/// Parses program source text into a [`Program`].
pub fn parse(source: &str) -> Result<Program, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, at: 0 };
    let mut program = Program::default();
    let mut seen_facts: BTreeMap<Atom, Pos> = BTreeMap::new();
    while p.peek() != &Tok::Eof {
        let pos = p.pos();
        match p.statement()? {
            Statement::Fact(fact) => {
                if seen_facts.insert(fact.atom.clone(), pos).is_some() {
                    return Err(DslError::Duplicate {
                        pos: Some(pos),
                        what: format!("fact {}", fact.atom),
                    });
                }
                program.prob_facts.push(fact);
                program.source.prob_facts.push(pos);
            }
            Statement::Rule(r) => {
                program.rules.push(r);
                program.source.rules.push(pos);
            }
            Statement::Gnn(s) => {
                program.gnn_schemas.push(s);
                program.source.gnn_schemas.push(pos);
            }
            Statement::Model(m) => {
                if program.models.contains_key(&m.model_id) {
                    return Err(DslError::Duplicate {
                        pos: Some(pos),
                        what: format!("model {}", m.model_id),
                    });
                }
                program.models.insert(m.model_id.clone(), m);
            }
            Statement::Query(a) => program.queries.push(a),
            Statement::Evidence(a) => program.evidence.push(a),
        }
    }
    Ok(program)
}

/// Parses a single atom such as `legal_move(a)`; used for query strings.
pub fn parse_atom(source: &str) -> Result<Atom, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, at: 0 };
    let a = p.atom()?;
    if p.peek() == &Tok::Dot {
        p.bump();
    }
    p.expect_eof()?;
    Ok(a)
}

enum Statement {
    Fact(ProbFact),
    Rule(Rule),
    Gnn(GnnFactSchema),
    Model(ModelDecl),
    Query(Atom),
    Evidence(Atom),
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax {
            pos: self.pos(),
            found: self.peek().to_string(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), DslError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected '{want}'"))
        }
    }

    fn expect_eof(&self) -> Result<(), DslError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error("unexpected trailing input")
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn number(&mut self) -> Result<(String, f64), DslError> {
        match self.peek().clone() {
            Tok::Number(s) => match s.parse::<f64>() {
                Ok(v) => {
                    self.bump();
                    Ok((s, v))
                }
                Err(_) => self.error("malformed number"),
            },
            _ => self.error("expected number"),
        }
    }

    fn integer(&mut self) -> Result<usize, DslError> {
        match self.peek().clone() {
            Tok::Number(s) => match s.parse::<usize>() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.error("expected non-negative integer"),
            },
            _ => self.error("expected integer"),
        }
    }

    fn statement(&mut self) -> Result<Statement, DslError> {
        let stmt = match self.peek().clone() {
            Tok::Hash => self.model_directive()?,
            Tok::Number(_) => {
                let (_, prob) = self.number()?;
                self.expect(Tok::DoubleColon)?;
                let atom = self.atom()?;
                Statement::Fact(ProbFact::fixed(atom, prob))
            }
            Tok::Ident(name) if name == "t" && self.peek_at(1) == &Tok::LParen
                && matches!(self.peek_at(2), Tok::Number(_))
                && self.peek_at(3) == &Tok::RParen
                && self.peek_at(4) == &Tok::DoubleColon =>
            {
                self.bump();
                self.bump();
                let (_, init) = self.number()?;
                self.bump();
                self.bump();
                let atom = self.atom()?;
                Statement::Fact(ProbFact {
                    atom,
                    prob: init,
                    learnable: true,
                    param_id: None,
                })
            }
            Tok::Ident(name) if name == "gnn" => self.gnn_fact()?,
            Tok::Ident(name)
                if (name == "query" || name == "evidence") && self.peek_at(1) == &Tok::LParen =>
            {
                self.bump();
                self.bump();
                let a = self.atom()?;
                self.expect(Tok::RParen)?;
                if name == "query" {
                    Statement::Query(a)
                } else {
                    Statement::Evidence(a)
                }
            }
            Tok::Ident(_) => {
                let head = self.atom()?;
                if self.peek() == &Tok::Neck {
                    self.bump();
                    let body = self.body()?;
                    Statement::Rule(Rule::new(head, body))
                } else if self.peek() == &Tok::DoubleColon {
                    return self.error("probability annotation must precede the atom");
                } else if head.is_ground() {
                    Statement::Fact(ProbFact::fixed(head, 1.0))
                } else {
                    Statement::Rule(Rule::new(head, vec![]))
                }
            }
            _ => return self.error("expected a statement"),
        };
        self.expect(Tok::Dot)?;
        Ok(stmt)
    }

    fn model_directive(&mut self) -> Result<Statement, DslError> {
        self.expect(Tok::Hash)?;
        let kw = self.ident()?;
        if kw != "model" {
            return Err(DslError::Syntax {
                pos: self.tokens[self.at - 1].pos,
                found: kw,
                message: "unknown directive".into(),
            });
        }
        self.expect(Tok::LParen)?;
        let model_id = self.ident()?;
        let mut layers = DEFAULT_LAYERS;
        let mut hidden = DEFAULT_HIDDEN;
        let mut readout = None;
        while self.peek() == &Tok::Comma {
            self.bump();
            let key_pos = self.pos();
            let key = self.ident()?;
            self.expect(Tok::Eq)?;
            match key.as_str() {
                "layers" => layers = self.integer()?,
                "hidden" => hidden = self.integer()?,
                "readout" => {
                    let r = self.ident()?;
                    readout = Some(match r.as_str() {
                        "node" => Readout::Node,
                        "edge" => Readout::Edge,
                        "graph" => Readout::Graph,
                        _ => {
                            return Err(DslError::Syntax {
                                pos: self.tokens[self.at - 1].pos,
                                found: r,
                                message: "readout must be node, edge or graph".into(),
                            })
                        }
                    });
                }
                _ => {
                    return Err(DslError::Syntax {
                        pos: key_pos,
                        found: key,
                        message: "unknown model option".into(),
                    })
                }
            }
        }
        self.expect(Tok::RParen)?;
        let Some(readout) = readout else {
            return self.error("model directive needs readout=node|edge|graph");
        };
        if layers == 0 || hidden == 0 {
            return self.error("layers and hidden must be positive");
        }
        Ok(Statement::Model(ModelDecl {
            model_id,
            layers,
            hidden,
            readout,
        }))
    }

    fn gnn_fact(&mut self) -> Result<Statement, DslError> {
        self.bump();
        self.expect(Tok::LParen)?;
        let model_id = self.ident()?;
        self.expect(Tok::Comma)?;
        self.expect(Tok::LBracket)?;
        let mut gamma = Vec::new();
        if self.peek() != &Tok::RBracket {
            loop {
                gamma.push(self.gamma_item()?);
                if self.peek() == &Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBracket)?;
        let mut targets = Vec::new();
        if self.peek() == &Tok::Comma {
            self.bump();
            self.expect(Tok::LBracket)?;
            if self.peek() != &Tok::RBracket {
                targets = self.terms()?;
            }
            self.expect(Tok::RBracket)?;
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::DoubleColon)?;
        let head_pos = self.pos();
        let mut head_group = vec![self.atom()?];
        while self.peek() == &Tok::Semicolon {
            self.bump();
            head_group.push(self.atom()?);
        }
        let arity = head_group[0].arity();
        if let Some(bad) = head_group.iter().find(|h| h.arity() != arity) {
            return Err(DslError::ArityConflict {
                pos: Some(head_pos),
                message: format!(
                    "head group mixes arities: {} has arity {}, expected {}",
                    bad,
                    bad.arity(),
                    arity
                ),
            });
        }
        let mut guard = Vec::new();
        if self.peek() == &Tok::Neck {
            self.bump();
            guard = self.body()?;
        }
        Ok(Statement::Gnn(GnnFactSchema {
            model_id,
            gamma,
            targets,
            head_group,
            guard,
        }))
    }

    fn gamma_item(&mut self) -> Result<GammaItem, DslError> {
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Slash {
            let name = self.ident()?;
            self.bump();
            let arity = self.integer()?;
            return Ok(GammaItem::Indicator(PredicateKey { name, arity }));
        }
        Ok(GammaItem::Atom(self.atom()?))
    }

    fn body(&mut self) -> Result<Vec<Atom>, DslError> {
        let mut body = vec![self.atom()?];
        while self.peek() == &Tok::Comma {
            self.bump();
            body.push(self.atom()?);
        }
        Ok(body)
    }

    fn atom(&mut self) -> Result<Atom, DslError> {
        let predicate = self.ident()?;
        if predicate == "gnn" {
            return Err(DslError::Syntax {
                pos: self.tokens[self.at - 1].pos,
                found: predicate,
                message: "'gnn' is reserved for graph neural facts".into(),
            });
        }
        let mut args = Vec::new();
        if self.peek() == &Tok::LParen {
            self.bump();
            args = self.terms()?;
            self.expect(Tok::RParen)?;
        }
        Ok(Atom::new(predicate, args))
    }

    fn terms(&mut self) -> Result<Vec<Term>, DslError> {
        let mut out = vec![self.term()?];
        while self.peek() == &Tok::Comma {
            self.bump();
            out.push(self.term()?);
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<Term, DslError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Const(n))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    self.bump();
                    let args = self.terms()?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Const(name))
                }
            }
            _ => self.error("expected a term"),
        }
    }
}
