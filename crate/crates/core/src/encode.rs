//! Method dispatch: turns normalized constraints and whole models into CNF.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cnf::{CnfBuilder, Lit};
use crate::logadder::{adder_encode, ripple_add, BinWord};
use crate::mdd::{bdd_terms, Mdd, MddEncoder};
use crate::model::{normalize, IntEncoding, LogEncoding, Model, ModelError, NormalizedLI, OrderEncoding, Subst};
use crate::netblocks::{card_network, totalizer, TotalizerStyle};
use crate::preproc::group_coefficients;
use crate::sn::{best_base, opt_cost, sn_opt_bound, sn_opt_encode, sn_tare_encode, tare_cost, SnConfig};
use crate::support::support_encode;

/// The available constraint encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Adder,
    Totalizer,
    CardNet,
    Support,
    Mdd,
    SnTare,
    SnOpt,
    Bdd,
    BddDec,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Adder,
        Method::Totalizer,
        Method::CardNet,
        Method::Support,
        Method::Mdd,
        Method::SnTare,
        Method::SnOpt,
        Method::Bdd,
        Method::BddDec,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Adder => "adder",
            Method::Totalizer => "totalizer",
            Method::CardNet => "card-net",
            Method::Support => "support",
            Method::Mdd => "mdd",
            Method::SnTare => "sn-tare",
            Method::SnOpt => "sn-opt",
            Method::Bdd => "bdd",
            Method::BddDec => "bdd-dec",
        }
    }

    /// Whether integer variables are log-encoded (otherwise order-encoded).
    pub fn uses_log(self) -> bool {
        matches!(self, Method::Adder | Method::Bdd | Method::BddDec)
    }

    /// Whether a base parameter applies.
    pub fn uses_base(self) -> bool {
        matches!(self, Method::SnTare | Method::SnOpt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown method `{0}`")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Errors raised while encoding models.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("coefficient grouping needs an order-encoded method, not `{0}`")]
    GroupingNeedsOrder(Method),
    #[error("base must lie in 2..=10, got {0}")]
    BadBase(i64),
}

/// Knobs shared by all methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Base for the digit encodings; `None` searches `2..=10`.
    pub base: Option<i64>,
    /// Group equal coefficients before encoding.
    pub group: bool,
    pub sn: SnConfig,
    pub totalizer: TotalizerStyle,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            base: None,
            group: false,
            sn: SnConfig::default(),
            totalizer: TotalizerStyle::Compact,
        }
    }
}

impl EncodeOptions {
    fn check(&self, method: Method) -> Result<(), EncodeError> {
        if let Some(b) = self.base {
            if !(2..=10).contains(&b) {
                return Err(EncodeError::BadBase(b));
            }
        }
        if self.group && method.uses_log() {
            return Err(EncodeError::GroupingNeedsOrder(method));
        }
        Ok(())
    }
}

/// Per-constraint facts reported by the encoders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintInfo {
    /// Base chosen by the digit encodings.
    pub base: Option<i64>,
}

/// Expands order selectors with multiplicity `coef`.
fn replicated_inputs(coefs: &[i64], selectors: &[Vec<Lit>]) -> Vec<Lit> {
    let mut out = Vec::new();
    for (&a, sel) in coefs.iter().zip(selectors) {
        for &b in sel {
            out.extend(std::iter::repeat_n(b, a as usize));
        }
    }
    out
}

/// Encodes `li` over order-encoded variables (`selectors[i][v-1]` is
/// `x'_i ≥ v`).
pub fn encode_order(
    db: &mut CnfBuilder,
    li: &NormalizedLI,
    selectors: &[Vec<Lit>],
    method: Method,
    opts: &EncodeOptions,
) -> ConstraintInfo {
    assert!(!method.uses_log());
    if opts.group {
        let g = group_coefficients(db, li, selectors);
        let inner = EncodeOptions { group: false, ..*opts };
        return encode_order(db, &g.li, &g.selectors, method, &inner);
    }
    let coefs = li.coefs();
    let bound = li.bound;
    let mut info = ConstraintInfo::default();
    if bound < 0 {
        db.add_clause([]);
        return info;
    }
    if li.is_trivially_true() {
        return info;
    }
    match method {
        Method::Mdd => {
            let mut mdd = Mdd::new(&coefs, &li.doms());
            let root = mdd.build(bound);
            MddEncoder::new().encode(db, &mdd, root, selectors);
        }
        Method::Support => {
            support_encode(db, &coefs, selectors, bound);
        }
        Method::Totalizer | Method::CardNet => {
            let inputs = replicated_inputs(&coefs, selectors);
            let cap = bound as usize + 1;
            let out = if method == Method::Totalizer {
                totalizer(db, &inputs, cap, opts.totalizer)
            } else {
                card_network(db, &inputs, cap)
            };
            if let Some(&z) = out.get(cap - 1) {
                db.add_clause([!z]);
            }
        }
        Method::SnTare => {
            let doms = li.doms();
            let b = opts
                .base
                .unwrap_or_else(|| best_base(|b| tare_cost(&coefs, &doms, bound, b, opts.sn)));
            sn_tare_encode(db, &coefs, selectors, bound, b, opts.sn, true);
            info.base = Some(b);
        }
        Method::SnOpt => {
            let doms = li.doms();
            let b = opts
                .base
                .unwrap_or_else(|| best_base(|b| opt_cost(&coefs, &doms, bound, b, opts.sn)));
            let enc = sn_opt_encode(db, &coefs, selectors, b, opts.sn);
            sn_opt_bound(db, &enc, bound);
            info.base = Some(b);
        }
        Method::Adder | Method::Bdd | Method::BddDec => unreachable!(),
    }
    info
}

/// Encodes `li` over log-encoded variables with offset zero.
pub fn encode_log(db: &mut CnfBuilder, li: &NormalizedLI, vars: &[LogEncoding], method: Method) -> ConstraintInfo {
    assert!(method.uses_log());
    let coefs = li.coefs();
    let bound = li.bound;
    if bound < 0 {
        db.add_clause([]);
        return ConstraintInfo::default();
    }
    if li.is_trivially_true() {
        return ConstraintInfo::default();
    }
    match method {
        Method::Adder => {
            adder_encode(db, &coefs, vars, bound);
        }
        Method::Bdd | Method::BddDec => {
            let terms = bdd_terms(&coefs, vars, method == Method::BddDec);
            let tc: Vec<i64> = terms.iter().map(|t| t.0).collect();
            let sels: Vec<Vec<Lit>> = terms.iter().map(|t| vec![t.1]).collect();
            let mut mdd = Mdd::new(&tc, &vec![1; tc.len()]);
            let root = mdd.build(bound);
            MddEncoder::new().encode(db, &mdd, root, &sels);
        }
        _ => unreachable!(),
    }
    ConstraintInfo::default()
}

/// A single normalized constraint encoded on its own, with fresh variable
/// encodings `x'_i ∈ [0, d_i]`.
#[derive(Clone, Debug)]
pub struct EncodingArtifact {
    pub method: Method,
    pub cnf: CnfBuilder,
    /// One encoding per term of the constraint.
    pub vars: Vec<IntEncoding>,
    pub info: ConstraintInfo,
}

/// Allocates variable encodings for `li` and encodes it with `method`.
pub fn encode_constraint(li: &NormalizedLI, method: Method, opts: &EncodeOptions) -> EncodingArtifact {
    let mut db = CnfBuilder::new();
    let (vars, info) = if method.uses_log() {
        let encs: Vec<LogEncoding> = li
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| LogEncoding::new(&mut db, &format!("x{}", i + 1), 0, t.dom))
            .collect();
        let info = encode_log(&mut db, li, &encs, method);
        (encs.into_iter().map(IntEncoding::Log).collect(), info)
    } else {
        let encs: Vec<OrderEncoding> = li
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| OrderEncoding::new(&mut db, &format!("x{}", i + 1), 0, t.dom))
            .collect();
        let sels: Vec<Vec<Lit>> = encs.iter().map(|e| e.bits.clone()).collect();
        let info = encode_order(&mut db, li, &sels, method, opts);
        (encs.into_iter().map(IntEncoding::Order).collect(), info)
    };
    EncodingArtifact {
        method,
        cnf: db,
        vars,
        info,
    }
}

/// A whole model in CNF.
#[derive(Clone, Debug)]
pub struct ModelEncoding {
    pub method: Method,
    pub cnf: CnfBuilder,
    /// One encoding per model variable.
    pub vars: Vec<IntEncoding>,
    /// Bases chosen for the digit encodings, one per encoded row.
    pub bases: Vec<i64>,
}

impl ModelEncoding {
    /// Model values from a satisfying assignment.
    pub fn decode(&self, model: &[bool]) -> Vec<i64> {
        self.vars.iter().map(|e| e.decode(model)).collect()
    }

    /// The base reported in statistics: the common base, if all rows agree.
    pub fn reported_base(&self) -> Option<i64> {
        let first = *self.bases.first()?;
        self.bases.iter().all(|&b| b == first).then_some(first)
    }

    /// Order selectors of a normalized row.
    pub fn order_views(&self, li: &NormalizedLI) -> Vec<Vec<Lit>> {
        li.terms
            .iter()
            .map(|t| {
                self.vars[t.var]
                    .as_order()
                    .expect("order-encoded model")
                    .view(t.subst)
                    .bits
            })
            .collect()
    }

    /// Log encodings of a normalized row; reflected variables get a fresh
    /// word tied to the original by `x' + (x - lo) = hi - lo`.
    pub fn log_views(&mut self, li: &NormalizedLI) -> Vec<LogEncoding> {
        let mut out = Vec::with_capacity(li.len());
        for t in &li.terms {
            let base = self.vars[t.var].as_log().expect("log-encoded model").clone();
            match t.subst {
                Subst::Shift { .. } => out.push(LogEncoding {
                    lo: 0,
                    hi: t.dom,
                    bits: base.bits,
                }),
                Subst::Reflect { .. } => {
                    let db = &mut self.cnf;
                    let fresh = LogEncoding::new(db, &format!("x{}'", t.var), 0, t.dom);
                    let sum = ripple_add(db, &BinWord::from_log(&fresh), &BinWord::from_log(&base));
                    for (i, b) in sum.bits.iter().enumerate() {
                        let want = (t.dom >> i) & 1 == 1;
                        match b {
                            Some(l) => {
                                db.add_clause([if want { *l } else { !*l }]);
                            }
                            None if want => {
                                db.add_clause([]);
                            }
                            None => {}
                        }
                    }
                    out.push(fresh);
                }
            }
        }
        out
    }

    /// Encodes one normalized row into the model's clause store.
    pub fn add_row(&mut self, li: &NormalizedLI, opts: &EncodeOptions) {
        if self.method.uses_log() {
            let views = self.log_views(li);
            encode_log(&mut self.cnf, li, &views, self.method);
        } else {
            let sels = self.order_views(li);
            let info = encode_order(&mut self.cnf, li, &sels, self.method, opts);
            self.bases.extend(info.base);
        }
    }
}

/// Allocates one encoding per model variable, then encodes every
/// constraint and side clause.
pub fn encode_model(model: &Model, method: Method, opts: &EncodeOptions) -> Result<ModelEncoding, EncodeError> {
    opts.check(method)?;
    let mut db = CnfBuilder::new();
    let vars: Vec<IntEncoding> = model
        .vars
        .iter()
        .map(|v| {
            if method.uses_log() {
                IntEncoding::Log(LogEncoding::new(&mut db, &v.name, v.lo, v.hi))
            } else {
                IntEncoding::Order(OrderEncoding::new(&mut db, &v.name, v.lo, v.hi))
            }
        })
        .collect();
    let mut enc = ModelEncoding {
        method,
        cnf: db,
        vars,
        bases: Vec::new(),
    };
    let mut rows = Vec::new();
    for c in &model.constraints {
        rows.extend(normalize(c, &model.vars)?);
    }
    for row in &rows {
        enc.add_row(row, opts);
    }
    for cl in &model.clauses {
        let lits: Vec<Lit> = cl
            .iter()
            .map(|&(v, pos)| {
                let bit = match &enc.vars[v] {
                    IntEncoding::Order(o) => o.bits[0],
                    IntEncoding::Log(l) => l.bits[0],
                };
                if pos {
                    bit
                } else {
                    !bit
                }
            })
            .collect();
        enc.cnf.add_clause(lits);
    }
    Ok(enc)
}
