//! Integer variables, linear constraints, normalization and the order/log
//! encodings of integer domains.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::cnf::{CnfBuilder, Lit, PartialAssignment};

/// Errors from model construction, normalization and the text reader.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("arithmetic overflow while normalizing")]
    Overflow,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// An integer variable with domain `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntVar {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

impl IntVar {
    pub fn new(name: impl Into<String>, lo: i64, hi: i64) -> Result<Self, ModelError> {
        let name = name.into();
        if lo > hi {
            return Err(ModelError::EmptyDomain(name));
        }
        Ok(IntVar { name, lo, hi })
    }

    pub fn is_bool(&self) -> bool {
        self.lo == 0 && self.hi == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl RelOp {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            RelOp::Le => lhs <= rhs,
            RelOp::Lt => lhs < rhs,
            RelOp::Ge => lhs >= rhs,
            RelOp::Gt => lhs > rhs,
            RelOp::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelOp::Le => "<=",
            RelOp::Lt => "<",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
            RelOp::Eq => "=",
        })
    }
}

/// `Σ coef · var  op  rhs` over model variable indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConstraint {
    pub terms: Vec<(i64, usize)>,
    pub op: RelOp,
    pub rhs: i64,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(i64, usize)>, op: RelOp, rhs: i64) -> Self {
        LinearConstraint { terms, op, rhs }
    }

    pub fn holds(&self, values: &[i64]) -> bool {
        let lhs: i64 = self.terms.iter().map(|&(a, v)| a * values[v]).sum();
        self.op.holds(lhs, self.rhs)
    }
}

/// How a normalized variable relates to its model variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subst {
    /// `x' = x - lo`
    Shift { lo: i64 },
    /// `x' = hi - x`
    Reflect { hi: i64 },
}

impl Subst {
    /// Value of `x'` for a model value `x`.
    pub fn apply(self, x: i64) -> i64 {
        match self {
            Subst::Shift { lo } => x - lo,
            Subst::Reflect { hi } => hi - x,
        }
    }

    /// Model value for a normalized value.
    pub fn invert(self, xp: i64) -> i64 {
        match self {
            Subst::Shift { lo } => xp + lo,
            Subst::Reflect { hi } => hi - xp,
        }
    }
}

/// One term `coef · x'` of a normalized constraint, `x' ∈ [0, dom]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormTerm {
    pub coef: i64,
    pub dom: i64,
    /// Index of the model variable behind `x'`.
    pub var: usize,
    pub subst: Subst,
}

/// `Σ coef_i · x'_i ≤ bound` with positive coefficients and `x'_i ∈ [0, dom_i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedLI {
    pub terms: Vec<NormTerm>,
    pub bound: i64,
}

impl NormalizedLI {
    /// Builds a constraint over fresh variables `0..n` with identity
    /// substitutions.
    ///
    /// # Panics
    /// If lengths differ, a coefficient is not positive or a domain is negative.
    pub fn new(coefs: &[i64], doms: &[i64], bound: i64) -> Self {
        assert_eq!(coefs.len(), doms.len());
        let terms = coefs
            .iter()
            .zip(doms)
            .enumerate()
            .map(|(i, (&coef, &dom))| {
                assert!(coef > 0 && dom >= 0, "coefficients must be positive, domains non-negative");
                NormTerm {
                    coef,
                    dom,
                    var: i,
                    subst: Subst::Shift { lo: 0 },
                }
            })
            .collect();
        NormalizedLI { terms, bound }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefs(&self) -> Vec<i64> {
        self.terms.iter().map(|t| t.coef).collect()
    }

    pub fn doms(&self) -> Vec<i64> {
        self.terms.iter().map(|t| t.dom).collect()
    }

    /// `Σ coef_i · dom_i`, the largest attainable left-hand side.
    pub fn max_lhs(&self) -> i64 {
        self.terms.iter().map(|t| t.coef * t.dom).sum()
    }

    /// Satisfied by every point of the box.
    pub fn is_trivially_true(&self) -> bool {
        self.max_lhs() <= self.bound
    }

    /// Violated by every point of the box.
    pub fn is_trivially_false(&self) -> bool {
        self.bound < 0
    }

    /// Evaluates on normalized values.
    pub fn holds(&self, xs: &[i64]) -> bool {
        self.lhs(xs) <= self.bound
    }

    pub fn lhs(&self, xs: &[i64]) -> i64 {
        self.terms.iter().zip(xs).map(|(t, &x)| t.coef * x).sum()
    }

    pub fn with_bound(&self, bound: i64) -> Self {
        NormalizedLI {
            terms: self.terms.clone(),
            bound,
        }
    }
}

impl fmt::Display for NormalizedLI {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*x{}[0..{}]", t.coef, i + 1, t.dom)?;
        }
        if self.terms.is_empty() {
            f.write_str("0")?;
        }
        write!(f, " <= {}", self.bound)
    }
}

fn checked(v: Option<i64>) -> Result<i64, ModelError> {
    v.ok_or(ModelError::Overflow)
}

/// Rewrites one `≤` row `Σ a_i x_i ≤ a0` into normalized form.
fn normalize_le(terms: &[(i64, usize)], a0: i64, vars: &[IntVar]) -> Result<NormalizedLI, ModelError> {
    // merge repeated occurrences, keeping first-occurrence order
    let mut merged: Vec<(i64, usize)> = Vec::new();
    for &(a, v) in terms {
        if v >= vars.len() {
            return Err(ModelError::UnknownVariable(format!("#{v}")));
        }
        match merged.iter_mut().find(|(_, w)| *w == v) {
            Some(slot) => slot.0 = checked(slot.0.checked_add(a))?,
            None => merged.push((a, v)),
        }
    }
    let mut bound = a0;
    let mut out = Vec::new();
    for (a, v) in merged {
        if a == 0 {
            continue;
        }
        let IntVar { lo, hi, .. } = vars[v];
        let dom = checked(hi.checked_sub(lo))?;
        if a > 0 {
            bound = checked(bound.checked_sub(checked(a.checked_mul(lo))?))?;
            if dom > 0 {
                out.push(NormTerm {
                    coef: a,
                    dom,
                    var: v,
                    subst: Subst::Shift { lo },
                });
            }
        } else {
            bound = checked(bound.checked_sub(checked(a.checked_mul(hi))?))?;
            if dom > 0 {
                out.push(NormTerm {
                    coef: checked(a.checked_neg())?,
                    dom,
                    var: v,
                    subst: Subst::Reflect { hi },
                });
            }
        }
    }
    let li = NormalizedLI { terms: out, bound };
    // guard the encoders' arithmetic
    let mut acc: i64 = 0;
    for t in &li.terms {
        acc = checked(acc.checked_add(checked(t.coef.checked_mul(t.dom))?))?;
    }
    Ok(li)
}

/// Normalizes a constraint into one or two `≤` rows.
pub fn normalize(c: &LinearConstraint, vars: &[IntVar]) -> Result<Vec<NormalizedLI>, ModelError> {
    let neg = |ts: &[(i64, usize)]| -> Result<Vec<(i64, usize)>, ModelError> {
        ts.iter()
            .map(|&(a, v)| Ok((checked(a.checked_neg())?, v)))
            .collect()
    };
    let rhs = c.rhs;
    Ok(match c.op {
        RelOp::Le => vec![normalize_le(&c.terms, rhs, vars)?],
        RelOp::Lt => vec![normalize_le(&c.terms, checked(rhs.checked_sub(1))?, vars)?],
        RelOp::Ge => vec![normalize_le(&neg(&c.terms)?, checked(rhs.checked_neg())?, vars)?],
        RelOp::Gt => vec![normalize_le(
            &neg(&c.terms)?,
            checked(checked(rhs.checked_neg())?.checked_sub(1))?,
            vars,
        )?],
        RelOp::Eq => vec![
            normalize_le(&c.terms, rhs, vars)?,
            normalize_le(&neg(&c.terms)?, checked(rhs.checked_neg())?, vars)?,
        ],
    })
}

/// Per-variable finite integer sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DomainBox {
    sets: Vec<Vec<i64>>,
}

impl DomainBox {
    /// Sets are sorted and deduplicated.
    pub fn new(mut sets: Vec<Vec<i64>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        DomainBox { sets }
    }

    /// `[0, d_i]` for every variable.
    pub fn full(doms: &[i64]) -> Self {
        DomainBox {
            sets: doms.iter().map(|&d| (0..=d).collect()).collect(),
        }
    }

    /// `[l_i, d_i]` for every variable.
    pub fn lower_bounds(lbs: &[i64], doms: &[i64]) -> Self {
        DomainBox {
            sets: lbs.iter().zip(doms).map(|(&l, &d)| (l..=d).collect()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i64] {
        &self.sets[i]
    }

    pub fn min(&self, i: usize) -> Option<i64> {
        self.sets[i].first().copied()
    }

    pub fn max(&self, i: usize) -> Option<i64> {
        self.sets[i].last().copied()
    }

    /// Some variable has no values left.
    pub fn is_failed(&self) -> bool {
        self.sets.iter().any(Vec::is_empty)
    }

    pub fn retain(&mut self, i: usize, keep: impl FnMut(&i64) -> bool) {
        self.sets[i].retain(keep);
    }

    /// Intersection, variable by variable.
    pub fn meet(&self, other: &DomainBox) -> DomainBox {
        DomainBox {
            sets: self
                .sets
                .iter()
                .zip(&other.sets)
                .map(|(a, b)| a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect())
                .collect(),
        }
    }

    /// Collapses any failed box to the canonical all-empty box so that two
    /// failures compare equal.
    pub fn canonical(self) -> DomainBox {
        if self.is_failed() {
            DomainBox {
                sets: vec![Vec::new(); self.sets.len()],
            }
        } else {
            self
        }
    }
}

/// Order encoding of `x ∈ [lo, hi]`: `bits[k] ⇔ x ≥ lo + 1 + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderEncoding {
    pub lo: i64,
    pub bits: Vec<Lit>,
}

impl OrderEncoding {
    /// Allocates bits with chain clauses `x ≥ i+1 → x ≥ i`.
    pub fn new(db: &mut CnfBuilder, name: &str, lo: i64, hi: i64) -> Self {
        let bits: Vec<Lit> = (lo + 1..=hi)
            .map(|i| db.new_lit("order", format!("{name}>={i}")))
            .collect();
        for w in bits.windows(2) {
            db.add_clause([!w[1], w[0]]);
        }
        OrderEncoding { lo, bits }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.bits.len() as i64
    }

    /// The literal for `x ≥ v`, or `None` when `v` is outside `(lo, hi]`.
    pub fn ge(&self, v: i64) -> Option<Lit> {
        if v <= self.lo || v > self.hi() {
            None
        } else {
            Some(self.bits[(v - self.lo - 1) as usize])
        }
    }

    /// Order encoding of the normalized variable `x'`.
    pub fn view(&self, subst: Subst) -> OrderEncoding {
        match subst {
            Subst::Shift { lo } => {
                debug_assert_eq!(lo, self.lo);
                OrderEncoding {
                    lo: 0,
                    bits: self.bits.clone(),
                }
            }
            Subst::Reflect { hi } => {
                debug_assert_eq!(hi, self.hi());
                OrderEncoding {
                    lo: 0,
                    bits: self.bits.iter().rev().map(|&l| !l).collect(),
                }
            }
        }
    }

    /// `e(S)`: the bounds of `S` as literals.
    pub fn embed(&self, set: &[i64]) -> Vec<Lit> {
        let (Some(&mn), Some(&mx)) = (set.first(), set.last()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for i in self.lo + 1..=self.hi() {
            if i <= mn {
                out.push(self.bits[(i - self.lo - 1) as usize]);
            } else if i > mx {
                out.push(!self.bits[(i - self.lo - 1) as usize]);
            }
        }
        out
    }

    /// `e⁻¹`: the interval allowed by a partial assignment.
    pub fn extract(&self, pa: &PartialAssignment) -> (i64, i64) {
        let mut lo = self.lo;
        let mut hi = self.hi();
        for (k, &b) in self.bits.iter().enumerate() {
            let v = self.lo + 1 + k as i64;
            match pa.value(b) {
                Some(true) => lo = lo.max(v),
                Some(false) => hi = hi.min(v - 1),
                None => {}
            }
        }
        (lo, hi)
    }

    /// Value of `x` in a total model.
    pub fn decode(&self, model: &[bool]) -> i64 {
        let lit_true = |l: Lit| model[l.var().index()] != l.is_negated();
        self.lo + self.bits.iter().filter(|&&b| lit_true(b)).count() as i64
    }

    /// Assumption literals fixing `x = v`.
    pub fn fix(&self, v: i64) -> Vec<Lit> {
        self.embed(&[v])
    }
}

/// Bits needed for values `0..=d`.
pub fn bits_for(d: i64) -> usize {
    if d <= 0 {
        0
    } else {
        (64 - (d as u64).leading_zeros()) as usize
    }
}

/// Lexicographic upper-bound clauses `Σ 2^i · bits[i] ≤ d` in the
/// Krom-simplified form: for each zero bit `i` of `d`,
/// `¬bits[i] ∨ ⋁_{j>i, d_j=1} ¬bits[j]`.
pub fn lex_le_clauses(db: &mut CnfBuilder, bits: &[Lit], d: i64) {
    if d < 0 {
        db.add_clause([]);
        return;
    }
    for i in 0..bits.len() {
        if i < 63 && (d >> i) & 1 == 1 {
            continue;
        }
        let mut clause = vec![!bits[i]];
        for (j, &b) in bits.iter().enumerate().skip(i + 1) {
            if j < 63 && (d >> j) & 1 == 1 {
                clause.push(!b);
            }
        }
        db.add_clause(clause);
    }
}

/// Log (binary) encoding of `x ∈ [lo, hi]`: `x = lo + Σ 2^i · bits[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEncoding {
    pub lo: i64,
    pub hi: i64,
    pub bits: Vec<Lit>,
}

impl LogEncoding {
    /// Allocates `⌈log2(hi-lo+1)⌉` bits plus the bound clauses for `hi - lo`.
    pub fn new(db: &mut CnfBuilder, name: &str, lo: i64, hi: i64) -> Self {
        let m = bits_for(hi - lo);
        let bits: Vec<Lit> = (0..m).map(|i| db.new_lit("log", format!("{name}.bit{i}"))).collect();
        lex_le_clauses(db, &bits, hi - lo);
        LogEncoding { lo, hi, bits }
    }

    fn offset_bit(v: i64, i: usize) -> bool {
        (v >> i) & 1 == 1
    }

    /// `e(S)`: bits on which every value of `S` agrees.
    pub fn embed(&self, set: &[i64]) -> Vec<Lit> {
        if set.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (i, &b) in self.bits.iter().enumerate() {
            let first = Self::offset_bit(set[0] - self.lo, i);
            if set.iter().all(|&v| Self::offset_bit(v - self.lo, i) == first) {
                out.push(if first { b } else { !b });
            }
        }
        out
    }

    /// `e⁻¹`: values in `[lo, hi]` whose bits agree with the assignment.
    pub fn extract(&self, pa: &PartialAssignment) -> Vec<i64> {
        (self.lo..=self.hi)
            .filter(|&v| {
                self.bits.iter().enumerate().all(|(i, &b)| match pa.value(b) {
                    Some(val) => val == Self::offset_bit(v - self.lo, i),
                    None => true,
                })
            })
            .collect()
    }

    pub fn decode(&self, model: &[bool]) -> i64 {
        let lit_true = |l: Lit| model[l.var().index()] != l.is_negated();
        self.lo
            + self
                .bits
                .iter()
                .enumerate()
                .filter(|&(_, &b)| lit_true(b))
                .map(|(i, _)| 1i64 << i)
                .sum::<i64>()
    }

    pub fn fix(&self, v: i64) -> Vec<Lit> {
        self.embed(&[v])
    }
}

/// The encoding chosen for an integer variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntEncoding {
    Order(OrderEncoding),
    Log(LogEncoding),
}

impl IntEncoding {
    pub fn embed(&self, set: &[i64]) -> Vec<Lit> {
        match self {
            IntEncoding::Order(o) => o.embed(set),
            IntEncoding::Log(l) => l.embed(set),
        }
    }

    /// Values of `[lo, hi]` compatible with the assignment.
    pub fn extract(&self, pa: &PartialAssignment) -> Vec<i64> {
        match self {
            IntEncoding::Order(o) => {
                let (lo, hi) = o.extract(pa);
                (lo..=hi).collect()
            }
            IntEncoding::Log(l) => l.extract(pa),
        }
    }

    pub fn decode(&self, model: &[bool]) -> i64 {
        match self {
            IntEncoding::Order(o) => o.decode(model),
            IntEncoding::Log(l) => l.decode(model),
        }
    }

    pub fn fix(&self, v: i64) -> Vec<Lit> {
        self.embed(&[v])
    }

    pub fn as_order(&self) -> Option<&OrderEncoding> {
        match self {
            IntEncoding::Order(o) => Some(o),
            IntEncoding::Log(_) => None,
        }
    }

    pub fn as_log(&self) -> Option<&LogEncoding> {
        match self {
            IntEncoding::Log(l) => Some(l),
            IntEncoding::Order(_) => None,
        }
    }
}

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// A linear objective over model variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(i64, usize)>,
}

impl Objective {
    pub fn value(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|&(a, v)| a * values[v]).sum()
    }
}

/// A literal over a Boolean model variable.
pub type ModelLit = (usize, bool);

/// Variables, linear constraints, side clauses and an optional objective.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub vars: Vec<IntVar>,
    pub constraints: Vec<LinearConstraint>,
    pub clauses: Vec<Vec<ModelLit>>,
    pub objective: Option<Objective>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: i64, hi: i64) -> Result<usize, ModelError> {
        self.vars.push(IntVar::new(name, lo, hi)?);
        Ok(self.vars.len() - 1)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Checks every constraint and clause on a full assignment.
    pub fn is_feasible(&self, values: &[i64]) -> bool {
        self.vars
            .iter()
            .zip(values)
            .all(|(v, &x)| v.lo <= x && x <= v.hi)
            && self.constraints.iter().all(|c| c.holds(values))
            && self
                .clauses
                .iter()
                .all(|cl| cl.iter().any(|&(v, pos)| (values[v] != 0) == pos))
    }

    /// Parses the line-oriented model format:
    ///
    /// ```text
    /// var x 0 4          # integer variable with domain [0, 4]
    /// bool y
    /// lin 3 x + 2 y <= 15
    /// min 2 x - y        # or: max ...
    /// clause y -z        # disjunction over Boolean variables
    /// ```
    pub fn parse(text: &str) -> Result<Model, ModelError> {
        let mut m = Model::new();
        let mut names: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| ModelError::Format { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let lookup = |name: &str| -> Result<usize, ModelError> {
                names
                    .get(name)
                    .copied()
                    .ok_or_else(|| err(format!("unknown variable `{name}`")))
            };
            match toks[0] {
                "var" | "bool" => {
                    let (name, lo, hi) = if toks[0] == "bool" {
                        if toks.len() != 2 {
                            return Err(err("expected `bool <name>`".into()));
                        }
                        (toks[1], 0, 1)
                    } else {
                        if toks.len() != 4 {
                            return Err(err("expected `var <name> <lo> <hi>`".into()));
                        }
                        let lo = toks[2].parse().map_err(|_| err(format!("bad bound `{}`", toks[2])))?;
                        let hi = toks[3].parse().map_err(|_| err(format!("bad bound `{}`", toks[3])))?;
                        (toks[1], lo, hi)
                    };
                    if !is_name(name) {
                        return Err(err(format!("bad variable name `{name}`")));
                    }
                    if names.contains_key(name) {
                        return Err(err(format!("duplicate variable `{name}`")));
                    }
                    if lo > hi {
                        return Err(err(format!("empty domain for `{name}`")));
                    }
                    names.insert(name.to_string(), m.vars.len());
                    m.vars.push(IntVar {
                        name: name.to_string(),
                        lo,
                        hi,
                    });
                }
                "lin" => {
                    let op_pos = toks
                        .iter()
                        .position(|t| matches!(*t, "<=" | "<" | ">=" | ">" | "=" | "=="))
                        .ok_or_else(|| err("missing relational operator".into()))?;
                    let op = match toks[op_pos] {
                        "<=" => RelOp::Le,
                        "<" => RelOp::Lt,
                        ">=" => RelOp::Ge,
                        ">" => RelOp::Gt,
                        _ => RelOp::Eq,
                    };
                    if op_pos + 2 != toks.len() {
                        return Err(err("expected a single right-hand side".into()));
                    }
                    let rhs = toks[op_pos + 1]
                        .parse()
                        .map_err(|_| err(format!("bad right-hand side `{}`", toks[op_pos + 1])))?;
                    let terms = parse_terms(&toks[1..op_pos], &lookup).map_err(err)?;
                    m.constraints.push(LinearConstraint { terms, op, rhs });
                }
                "min" | "max" => {
                    if m.objective.is_some() {
                        return Err(err("objective given twice".into()));
                    }
                    let terms = parse_terms(&toks[1..], &lookup).map_err(err)?;
                    m.objective = Some(Objective {
                        sense: if toks[0] == "min" { Sense::Min } else { Sense::Max },
                        terms,
                    });
                }
                "clause" => {
                    let mut cl = Vec::new();
                    for t in &toks[1..] {
                        let (pos, name) = match t.strip_prefix('-') {
                            Some(n) => (false, n),
                            None => (true, t.strip_prefix('+').unwrap_or(t)),
                        };
                        let v = lookup(name)?;
                        if !m.vars[v].is_bool() {
                            return Err(err(format!("clause literal `{name}` is not Boolean")));
                        }
                        cl.push((v, pos));
                    }
                    m.clauses.push(cl);
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        Ok(m)
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Parses `3 x + 2*y - z` into `(coef, var)` pairs.
fn parse_terms(
    toks: &[&str],
    lookup: &dyn Fn(&str) -> Result<usize, ModelError>,
) -> Result<Vec<(i64, usize)>, String> {
    let mut out = Vec::new();
    let mut sign = 1i64;
    let mut coef: Option<i64> = None;
    let pieces = toks.iter().flat_map(|t| t.split('*')).filter(|p| !p.is_empty());
    for p in pieces {
        match p {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(c) = p.parse::<i64>() {
                    if coef.is_some() {
                        return Err(format!("two coefficients in a row at `{p}`"));
                    }
                    coef = Some(c);
                } else {
                    let (neg, name) = match p.strip_prefix('-') {
                        Some(n) => (true, n),
                        None => (false, p),
                    };
                    let v = lookup(name).map_err(|e| match e {
                        ModelError::Format { msg, .. } => msg,
                        e => e.to_string(),
                    })?;
                    let c = coef.take().unwrap_or(1) * sign * if neg { -1 } else { 1 };
                    out.push((c, v));
                    sign = 1;
                }
            }
        }
    }
    if coef.is_some() {
        return Err("dangling coefficient".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::unit_propagate;

    fn vars(doms: &[(i64, i64)]) -> Vec<IntVar> {
        doms.iter()
            .enumerate()
            .map(|(i, &(lo, hi))| IntVar::new(format!("x{i}"), lo, hi).unwrap())
            .collect()
    }

    #[test]
    fn negative_coefficient_reflects() {
        let vs = vars(&[(0, 3), (0, 5)]);
        let c = LinearConstraint::new(vec![(2, 0), (-3, 1)], RelOp::Le, 4);
        let n = normalize(&c, &vs).unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].coefs(), vec![2, 3]);
        assert_eq!(n[0].bound, 19);
        assert_eq!(n[0].terms[1].subst, Subst::Reflect { hi: 5 });
    }

    #[test]
    fn equality_splits() {
        let vs = vars(&[(0, 3), (0, 3)]);
        let c = LinearConstraint::new(vec![(1, 0), (1, 1)], RelOp::Eq, 3);
        let n = normalize(&c, &vs).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(n[0].bound, 3);
        assert_eq!(n[1].bound, 3);
    }

    #[test]
    fn strict_and_lower_bounds() {
        let vs = vars(&[(2, 5)]);
        let n = normalize(&LinearConstraint::new(vec![(3, 0)], RelOp::Lt, 10), &vs).unwrap();
        // 3x < 10, x = x' + 2: 3x' <= 3
        assert_eq!(n[0].bound, 3);
        let n = normalize(&LinearConstraint::new(vec![(3, 0)], RelOp::Gt, 10), &vs).unwrap();
        // -3x <= -11, x' = 5 - x: 3x' <= 4
        assert_eq!(n[0].bound, 4);
    }

    #[test]
    fn overflow_is_reported() {
        let vs = vars(&[(0, i64::MAX / 2)]);
        let c = LinearConstraint::new(vec![(4, 0)], RelOp::Le, 0);
        assert_eq!(normalize(&c, &vs), Err(ModelError::Overflow));
    }

    #[test]
    fn order_roundtrip() {
        let mut db = CnfBuilder::new();
        let o = OrderEncoding::new(&mut db, "x", 0, 4);
        let pa = unit_propagate(&db, &[o.ge(1).unwrap(), !o.ge(3).unwrap()]).unwrap();
        assert_eq!(o.extract(&pa), (1, 2));
        for set in [vec![0, 4], vec![1, 2], vec![3]] {
            let pa = unit_propagate(&db, &o.embed(&set)).unwrap();
            assert_eq!(o.extract(&pa), (set[0], *set.last().unwrap()));
        }
    }

    #[test]
    fn log_bound_clauses_nine() {
        let mut db = CnfBuilder::new();
        let l = LogEncoding::new(&mut db, "x", 0, 9);
        assert_eq!(l.bits.len(), 4);
        let (y1, y2, y3) = (l.bits[1], l.bits[2], l.bits[3]);
        assert_eq!(db.clauses(), &[vec![!y1, !y3], vec![!y2, !y3]]);
        let pa = unit_propagate(&db, &l.embed(&[4, 5])).unwrap();
        assert_eq!(l.extract(&pa), vec![4, 5]);
    }

    #[test]
    fn parse_model() {
        let m = Model::parse("var x 0 4\nbool y\nlin 3 x + 2*y - x <= 15\nmin -x\nclause -y\n").unwrap();
        assert_eq!(m.vars.len(), 2);
        assert_eq!(m.constraints[0].terms, vec![(3, 0), (2, 1), (-1, 0)]);
        assert_eq!(m.objective.as_ref().unwrap().terms, vec![(-1, 0)]);
        assert_eq!(m.clauses, vec![vec![(1, false)]]);
        assert!(matches!(Model::parse("var x 0\n"), Err(ModelError::Format { line: 1, .. })));
        assert!(matches!(Model::parse("bool y\nlin 2 z <= 1\n"), Err(ModelError::Format { line: 2, .. })));
    }
}
