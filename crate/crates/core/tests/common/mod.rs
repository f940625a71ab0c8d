//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use lincnf::cnf::{unit_propagate, Clause, CnfBuilder, Lit, Var};

/// For every assignment of `inputs` (bit `i` of the mask is `inputs[i]`),
/// whether unit propagation forces `lit` true.
pub fn up_signature(db: &CnfBuilder, inputs: &[Lit], lit: Lit) -> Vec<bool> {
    (0u32..1 << inputs.len())
        .map(|mask| {
            let a: Vec<Lit> = inputs
                .iter()
                .enumerate()
                .map(|(i, &l)| if mask >> i & 1 == 1 { l } else { !l })
                .collect();
            match unit_propagate(db, &a) {
                Ok(pa) => pa.is_true(lit),
                Err(_) => true,
            }
        })
        .collect()
}

/// Sorted, duplicate-free view of a clause list.
pub fn clause_set(clauses: &[Clause]) -> BTreeSet<Vec<Lit>> {
    clauses
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort();
            c
        })
        .collect()
}

/// A clause list written with named variables, e.g. `["-y1", "-w2", "z3"]`.
pub struct Named {
    pub db: CnfBuilder,
    pub names: HashMap<String, Var>,
}

impl Named {
    pub fn new(inputs: &[&str]) -> Self {
        let mut n = Named {
            db: CnfBuilder::new(),
            names: HashMap::new(),
        };
        for &name in inputs {
            n.var(name);
        }
        n
    }

    pub fn var(&mut self, name: &str) -> Var {
        if let Some(&v) = self.names.get(name) {
            return v;
        }
        let v = self.db.new_var("named", name);
        self.names.insert(name.to_string(), v);
        v
    }

    pub fn lit(&mut self, tok: &str) -> Lit {
        match tok.strip_prefix('-') {
            Some(name) => self.var(name).neg(),
            None => self.var(tok).pos(),
        }
    }

    pub fn clause(&mut self, toks: &[&str]) -> Clause {
        toks.iter().map(|t| self.lit(t)).collect()
    }

    pub fn add(&mut self, toks: &[&str]) {
        let c = self.clause(toks);
        self.db.add_clause(c);
    }
}

/// Renames the auxiliary variables of `reference` onto those of `ours` by
/// matching UP signatures over all input assignments. Input variables are
/// `ref_inputs[i] ↦ our_inputs[i]`. Panics unless the match is a bijection.
pub fn match_by_signature(
    reference: &Named,
    ref_inputs: &[&str],
    ours: &CnfBuilder,
    our_inputs: &[Lit],
) -> HashMap<Var, Var> {
    let p_in: Vec<Lit> = ref_inputs.iter().map(|n| reference.names[*n].pos()).collect();
    let mut map: HashMap<Var, Var> = p_in.iter().zip(our_inputs).map(|(p, o)| (p.var(), o.var())).collect();
    let mut our_sigs: HashMap<Vec<bool>, Var> = HashMap::new();
    for id in 1..=ours.num_vars() as u32 {
        let v = Var::new(id);
        if our_inputs.iter().any(|l| l.var() == v) {
            continue;
        }
        let sig = up_signature(ours, our_inputs, v.pos());
        assert!(our_sigs.insert(sig, v).is_none(), "ambiguous signature for {v:?}");
    }
    for (name, &pv) in &reference.names {
        if ref_inputs.contains(&name.as_str()) {
            continue;
        }
        let sig = up_signature(&reference.db, &p_in, pv.pos());
        let ov = *our_sigs.get(&sig).unwrap_or_else(|| panic!("no counterpart for {name}"));
        map.insert(pv, ov);
    }
    assert_eq!(map.len(), ours.num_vars(), "variable counts differ");
    map
}

pub fn rename(clauses: &[Clause], map: &HashMap<Var, Var>) -> Vec<Clause> {
    clauses
        .iter()
        .map(|c| c.iter().map(|l| map[&l.var()].lit(!l.is_negated())).collect())
        .collect()
}

/// Emitted versus expected clauses of a worked example.
pub struct Fixture {
    pub ours: BTreeSet<Vec<Lit>>,
    pub expected: BTreeSet<Vec<Lit>>,
    pub emitted: usize,
    pub fresh: usize,
    /// Listed forced literals that unit propagation missed.
    pub unforced: Vec<&'static str>,
}

/// The reduced MDD encoding of `3x1 + 2x2 + 5x3 <= 15`, with the nodes of
/// the worked example named by `(level, residual bound)`.
pub fn mdd_reduced_fixture() -> Fixture {
    use lincnf::mdd::{Mdd, MddEncoder};
    use lincnf::model::OrderEncoding;

    let mut db = CnfBuilder::new();
    let xs: Vec<OrderEncoding> = [4, 2, 3]
        .iter()
        .enumerate()
        .map(|(i, &d)| OrderEncoding::new(&mut db, &format!("x{}", i + 1), 0, d))
        .collect();
    let sels: Vec<Vec<Lit>> = xs.iter().map(|x| x.bits.clone()).collect();
    let before = db.num_clauses();
    let mut mdd = Mdd::new(&[3, 2, 5], &[4, 2, 3]);
    let root = mdd.build(15);
    let mut enc = MddEncoder::new();
    enc.encode(&mut db, &mdd, root, &sels);
    let ours = clause_set(&db.clauses()[before..]);

    let mut z = |level: usize, k: i64| enc.var_of(&mdd, mdd.search(level, k).unwrap()).unwrap();
    let (z1, z2, z3, z5, z6) = (z(0, 15), z(1, 15), z(1, 12), z(1, 6), z(1, 3));
    let (z8, z9, z10) = (z(2, 12), z(2, 8), z(2, 4));
    let (zt, zf) = (z(3, 0), z(3, -1));
    // `x_i <= j` is the negated order literal for `x_i >= j+1`
    let le = |i: usize, j: i64| !xs[i].ge(j + 1).unwrap();
    let expected = clause_set(&[
        vec![z1],
        vec![zt],
        vec![!zf],
        vec![!z1, z2],
        vec![!z1, le(0, 0), z3],
        vec![!z1, le(0, 1), z9],
        vec![!z1, le(0, 2), z5],
        vec![!z1, le(0, 3), z6],
        vec![!z2, zt],
        vec![!z2, le(1, 0), z8],
        vec![!z3, z8],
        vec![!z3, le(1, 1), z9],
        vec![!z5, z9],
        vec![!z5, le(1, 0), z10],
        vec![!z6, z10],
        vec![!z6, le(1, 1), zf],
        vec![!z8, zt],
        vec![!z8, le(2, 2), zf],
        vec![!z9, zt],
        vec![!z9, le(2, 1), zf],
        vec![!z10, zt],
        vec![!z10, le(2, 0), zf],
    ]);
    Fixture {
        ours,
        expected,
        emitted: db.num_clauses() - before,
        fresh: enc.fresh_vars(),
        unforced: Vec::new(),
    }
}

/// The cardinality network of `y1 + ... + y5 <= 2` against the listed
/// clauses, and the literals forced by `{y1, y3}`.
pub fn card_net_fixture() -> Fixture {
    use lincnf::netblocks::card_network;

    let mut db = CnfBuilder::new();
    let y: Vec<Lit> = (1..=5).map(|i| db.new_lit("input", format!("y{i}"))).collect();
    let out = card_network(&mut db, &y, 3);
    let names = ["y1", "y2", "y3", "y4", "y5"];
    let mut p = Named::new(&names);
    let listed: [&[&str]; 18] = [
        &["-y1", "w1"],
        &["-y2", "w1"],
        &["-y3", "w1"],
        &["-y1", "-y2", "w2"],
        &["-y1", "-y3", "w2"],
        &["-y2", "-y3", "w2"],
        &["-y1", "-y2", "-y3", "w3"],
        &["-y4", "w4"],
        &["-y5", "w4"],
        &["-y4", "-y5", "w5"],
        &["-w1", "z1"],
        &["-w4", "z1"],
        &["-w2", "z2"],
        &["-w1", "-w4", "z2"],
        &["-w5", "z2"],
        &["-w3", "z3"],
        &["-w2", "-w4", "z3"],
        &["-w1", "-w5", "z3"],
    ];
    for c in listed {
        p.add(c);
    }
    let map = match_by_signature(&p, &names, &db, &y);
    db.add_clause([!out[2]]);
    p.add(&["-z3"]);
    let pa = unit_propagate(&db, &[y[0], y[2]]).expect("no conflict");
    let unforced = ["-z3", "-w3", "-y2", "w1", "w2", "-w4", "-w5", "-y4", "-y5"]
        .into_iter()
        .filter(|f| {
            let l = p.lit(f);
            !pa.is_true(map[&l.var()].lit(!l.is_negated()))
        })
        .collect();
    Fixture {
        ours: clause_set(db.clauses()),
        expected: clause_set(&rename(p.db.clauses(), &map)),
        emitted: db.num_clauses(),
        fresh: db.num_vars() - 5,
        unforced,
    }
}
