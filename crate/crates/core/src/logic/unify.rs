use std::collections::BTreeMap;
use std::fmt;

use super::term::{Atom, Rule, Term};

/// An idempotent mapping from variable names to terms.
///
/// Bindings are kept fully applied: no bound variable occurs in any
/// binding's value, so applying the substitution once is enough.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Adds `var ↦ term`, keeping the substitution idempotent.
    /// Fails on an occurs-check violation or a conflicting binding.
    pub fn bind(&mut self, var: &str, term: Term) -> bool {
        let term = self.apply_term(&term);
        if let Term::Var(v) = &term {
            if v == var {
                return true;
            }
        }
        if term.contains_var(var) {
            return false;
        }
        if let Some(existing) = self.bindings.get(var).cloned() {
            return unify_into(&existing, &term, self);
        }
        let single = Substitution {
            bindings: BTreeMap::from([(var.to_string(), term.clone())]),
        };
        for value in self.bindings.values_mut() {
            *value = single.apply_term(value);
        }
        self.bindings.insert(var.to_string(), term);
        true
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.apply_term(a)).collect())
            }
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| self.apply_term(t)).collect(),
        }
    }

    pub fn apply_rule(&self, r: &Rule) -> Rule {
        Rule {
            head: self.apply_atom(&r.head),
            body: r.body.iter().map(|b| self.apply_atom(b)).collect(),
        }
    }
}

impl FromIterator<(String, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in iter {
            s.bind(&v, t);
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} ↦ {t}")?;
        }
        f.write_str("}")
    }
}

/// Either side of a unification problem.
pub trait Unifiable {
    fn unify_with(&self, other: &Self, s: &mut Substitution) -> bool;
    fn substitute(&self, s: &Substitution) -> Self;
}

impl Unifiable for Term {
    fn unify_with(&self, other: &Self, s: &mut Substitution) -> bool {
        unify_into(self, other, s)
    }

    fn substitute(&self, s: &Substitution) -> Self {
        s.apply_term(self)
    }
}

impl Unifiable for Atom {
    fn unify_with(&self, other: &Self, s: &mut Substitution) -> bool {
        self.predicate == other.predicate
            && self.args.len() == other.args.len()
            && self.args.iter().zip(&other.args).all(|(a, b)| unify_into(a, b, s))
    }

    fn substitute(&self, s: &Substitution) -> Self {
        s.apply_atom(self)
    }
}

/// Most general unifier of two expressions, or `None` when none exists.
pub fn unify<T: Unifiable>(e1: &T, e2: &T) -> Option<Substitution> {
    let mut s = Substitution::new();
    e1.unify_with(e2, &mut s).then_some(s)
}

/// Extends `s` so that it also unifies `e1` and `e2`.
pub fn unify_extend<T: Unifiable>(e1: &T, e2: &T, s: &Substitution) -> Option<Substitution> {
    let mut s = s.clone();
    e1.unify_with(e2, &mut s).then_some(s)
}

pub fn apply_subst<T: Unifiable>(e: &T, s: &Substitution) -> T {
    e.substitute(s)
}

fn unify_into(a: &Term, b: &Term, s: &mut Substitution) -> bool {
    let a = s.apply_term(a);
    let b = s.apply_term(b);
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), _) => s.bind(x, b.clone()),
        (_, Term::Var(y)) => s.bind(y, a.clone()),
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Compound(f, fa), Term::Compound(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(x, y)| unify_into(x, y, s))
        }
        _ => false,
    }
}

/// Renames every variable of a rule by appending `#suffix`.
pub fn standardize_apart(rule: &Rule, suffix: usize) -> Rule {
    let ren: Substitution = rule
        .vars()
        .into_iter()
        .map(|v| {
            let fresh = Term::Var(format!("{v}#{suffix}"));
            (v, fresh)
        })
        .collect();
    ren.apply_rule(rule)
}
