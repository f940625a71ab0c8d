//! Propositional layer: variables, literals, an append-only clause store with
//! a role registry, DIMACS I/O and a watched-literal propagation engine.

mod dimacs;
mod engine;

pub use dimacs::{parse_dimacs, write_dimacs, write_roles};
pub use engine::{unit_propagate, Conflict, Engine, PartialAssignment, SolveOutcome};

use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// Errors raised by the clause store and the DIMACS reader.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("literal refers to unallocated variable {0}")]
    UnallocatedVariable(u32),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// A propositional variable, numbered from 1 in allocation order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(u32);

impl Var {
    /// Wraps a 1-based DIMACS variable number.
    ///
    /// # Panics
    /// If `id` is zero.
    pub fn new(id: u32) -> Self {
        assert!(id > 0, "variable ids start at 1");
        Var(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    /// Zero-based index, convenient for dense tables.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn pos(self) -> Lit {
        Lit((self.0 - 1) << 1)
    }

    pub fn neg(self) -> Lit {
        Lit(((self.0 - 1) << 1) | 1)
    }

    pub fn lit(self, positive: bool) -> Lit {
        if positive {
            self.pos()
        } else {
            self.neg()
        }
    }
}

/// A literal: a variable together with a polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn var(self) -> Var {
        Var((self.0 >> 1) + 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Dense code `2 * index + sign`, used for watch lists.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().id());
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    /// # Panics
    /// If `x` is zero.
    pub fn from_dimacs(x: i64) -> Lit {
        let v = Var::new(u32::try_from(x.unsigned_abs()).expect("variable id out of range"));
        v.lit(x > 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals.
pub type Clause = Vec<Lit>;

/// What a variable stands for, reported in the role map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Role {
    pub kind: String,
    pub detail: String,
}

/// Largest variable id we hand out; DIMACS readers commonly use `i32`.
const MAX_VARS: u32 = i32::MAX as u32;

/// Append-only clause store with a fresh-variable counter.
///
/// Every variable carries a [`Role`]. A shared constant-true variable is
/// allocated on first request; clauses mentioning constants are simplified on
/// insertion.
#[derive(Clone, Debug, Default)]
pub struct CnfBuilder {
    roles: Vec<Role>,
    clauses: Vec<Clause>,
    true_lit: Option<Lit>,
}

impl CnfBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates the next variable.
    ///
    /// # Panics
    /// When the variable counter would exceed the DIMACS range.
    pub fn new_var(&mut self, kind: &str, detail: impl Into<String>) -> Var {
        let id = self.roles.len() as u32 + 1;
        assert!(id <= MAX_VARS, "variable capacity exhausted");
        self.roles.push(Role {
            kind: kind.to_string(),
            detail: detail.into(),
        });
        Var::new(id)
    }

    /// Allocates a variable and returns its positive literal.
    pub fn new_lit(&mut self, kind: &str, detail: impl Into<String>) -> Lit {
        self.new_var(kind, detail).pos()
    }

    pub fn num_vars(&self) -> usize {
        self.roles.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn role(&self, v: Var) -> &Role {
        &self.roles[v.index()]
    }

    pub fn roles(&self) -> impl Iterator<Item = (Var, &Role)> {
        self.roles
            .iter()
            .enumerate()
            .map(|(i, r)| (Var::new(i as u32 + 1), r))
    }

    /// The shared constant-true literal (allocated with a unit clause on
    /// first use).
    pub fn true_lit(&mut self) -> Lit {
        if let Some(t) = self.true_lit {
            return t;
        }
        let t = self.new_lit("const", "true");
        self.clauses.push(vec![t]);
        self.true_lit = Some(t);
        t
    }

    pub fn false_lit(&mut self) -> Lit {
        !self.true_lit()
    }

    /// `Some(b)` if `lit` is the shared constant with value `b`.
    pub fn const_value(&self, lit: Lit) -> Option<bool> {
        let t = self.true_lit?;
        if lit == t {
            Some(true)
        } else if lit == !t {
            Some(false)
        } else {
            None
        }
    }

    /// Adds a clause, returning whether anything was stored.
    ///
    /// Duplicate literals are merged; tautologies and clauses containing the
    /// true constant are dropped; false constants are removed.
    ///
    /// # Panics
    /// If a literal mentions an unallocated variable.
    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) -> bool {
        match self.try_add_clause(lits) {
            Ok(stored) => stored,
            Err(e) => panic!("{e}"),
        }
    }

    /// Fallible variant of [`CnfBuilder::add_clause`].
    pub fn try_add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) -> Result<bool, CnfError> {
        let mut clause: Clause = Vec::new();
        for l in lits {
            if l.var().id() as usize > self.roles.len() {
                return Err(CnfError::UnallocatedVariable(l.var().id()));
            }
            match self.const_value(l) {
                Some(true) => return Ok(false),
                Some(false) => continue,
                None => {}
            }
            if clause.contains(&!l) {
                return Ok(false);
            }
            if !clause.contains(&l) {
                clause.push(l);
            }
        }
        self.clauses.push(clause);
        Ok(true)
    }

    /// Adds the implication `premises -> conclusion`.
    pub fn add_implication(&mut self, premises: &[Lit], conclusion: Lit) -> bool {
        self.add_clause(premises.iter().map(|&l| !l).chain(std::iter::once(conclusion)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_var_is_one() {
        let mut db = CnfBuilder::new();
        let v = db.new_var("x", "");
        assert_eq!(v.id(), 1);
        assert_eq!(db.new_var("x", "").id(), 2);
    }

    #[test]
    fn duplicates_and_tautologies() {
        let mut db = CnfBuilder::new();
        let y = db.new_lit("y", "");
        let z = db.new_lit("z", "");
        assert!(db.add_clause([y, y]));
        assert_eq!(db.clauses()[0], vec![y]);
        assert!(!db.add_clause([y, z, !y]));
        assert_eq!(db.num_clauses(), 1);
    }

    #[test]
    fn unallocated_is_error() {
        let mut db = CnfBuilder::new();
        db.new_var("y", "");
        let err = db.try_add_clause([Var::new(3).pos()]).unwrap_err();
        assert_eq!(err, CnfError::UnallocatedVariable(3));
    }

    #[test]
    fn constants_simplify() {
        let mut db = CnfBuilder::new();
        let y = db.new_lit("y", "");
        let t = db.true_lit();
        assert_eq!(db.num_clauses(), 1);
        assert!(!db.add_clause([y, t]));
        assert!(db.add_clause([y, !t]));
        assert_eq!(db.clauses()[1], vec![y]);
        assert!(db.add_clause([!t]));
        assert!(db.clauses()[2].is_empty());
    }

    #[test]
    fn dimacs_literals_roundtrip() {
        for x in [1i64, -1, 7, -42] {
            assert_eq!(Lit::from_dimacs(x).to_dimacs(), x);
        }
        assert_eq!(!Var::new(3).pos(), Var::new(3).neg());
    }
}
