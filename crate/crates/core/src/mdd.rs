//! Multi-valued decision diagrams for `Σ a_i x_i ≤ a0`, built with interval
//! memoization so that the same store serves a whole sequence of bounds.
//!
//! Level `i` branches on `x_i ∈ [0, d_i]`. Every node carries the interval
//! `[lo, hi]` of right-hand sides for which its sub-diagram is the same
//! function; a lookup for a new bound that falls into a stored interval
//! returns the existing node.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::cnf::{CnfBuilder, Lit};
use crate::model::LogEncoding;

pub type NodeId = usize;

/// The false terminal, interval `(-∞, -1]`.
pub const FALSE_NODE: NodeId = 0;
/// The true terminal, interval `[0, ∞)`.
pub const TRUE_NODE: NodeId = 1;

/// Stand-ins for infinite interval ends.
pub const NEG_INF: i64 = i64::MIN / 4;
pub const POS_INF: i64 = i64::MAX / 4;

fn shift(x: i64, by: i64) -> i64 {
    if x <= NEG_INF {
        NEG_INF
    } else if x >= POS_INF {
        POS_INF
    } else {
        x + by
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MddNode {
    /// Level of the node; terminals sit at level `n`.
    pub level: usize,
    pub lo: i64,
    pub hi: i64,
    /// Child for each value `0..=d_level`; empty for terminals.
    pub children: Vec<NodeId>,
}

/// A quasi-reduced MDD store for one left-hand side.
#[derive(Clone, Debug)]
pub struct Mdd {
    coefs: Vec<i64>,
    doms: Vec<i64>,
    nodes: Vec<MddNode>,
    /// Per level: `lo → (hi, node)`; intervals are disjoint.
    store: Vec<BTreeMap<i64, (i64, NodeId)>>,
}

impl Mdd {
    /// An empty store for `Σ coefs_i · x_i` with `x_i ∈ [0, doms_i]`.
    pub fn new(coefs: &[i64], doms: &[i64]) -> Self {
        assert_eq!(coefs.len(), doms.len());
        let n = coefs.len();
        let nodes = vec![
            MddNode {
                level: n,
                lo: NEG_INF,
                hi: -1,
                children: Vec::new(),
            },
            MddNode {
                level: n,
                lo: 0,
                hi: POS_INF,
                children: Vec::new(),
            },
        ];
        Mdd {
            coefs: coefs.to_vec(),
            doms: doms.to_vec(),
            nodes,
            store: vec![BTreeMap::new(); n],
        }
    }

    pub fn num_levels(&self) -> usize {
        self.coefs.len()
    }

    /// All nodes ever created, terminals included.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &MddNode {
        &self.nodes[id]
    }

    pub fn is_terminal(&self, id: NodeId) -> bool {
        id == FALSE_NODE || id == TRUE_NODE
    }

    /// The stored node at `level` whose interval contains `k`.
    pub fn search(&self, level: usize, k: i64) -> Option<NodeId> {
        if level == self.coefs.len() {
            return Some(if k >= 0 { TRUE_NODE } else { FALSE_NODE });
        }
        let (_, &(hi, id)) = self.store[level].range(..=k).next_back()?;
        (k <= hi).then_some(id)
    }

    /// Returns the root for `Σ a_i x_i ≤ bound`, creating only the nodes
    /// whose intervals are not yet stored.
    pub fn build(&mut self, bound: i64) -> NodeId {
        self.mk(0, bound)
    }

    fn mk(&mut self, level: usize, k: i64) -> NodeId {
        if let Some(id) = self.search(level, k) {
            return id;
        }
        let a = self.coefs[level];
        let d = self.doms[level];
        let mut children = Vec::with_capacity(d as usize + 1);
        let mut lo = NEG_INF;
        let mut hi = POS_INF;
        for j in 0..=d {
            let c = self.mk(level + 1, k - j * a);
            let cn = &self.nodes[c];
            lo = lo.max(shift(cn.lo, j * a));
            hi = hi.min(shift(cn.hi, j * a));
            children.push(c);
        }
        debug_assert!(lo <= k && k <= hi);
        let id = self.nodes.len();
        self.nodes.push(MddNode {
            level,
            lo,
            hi,
            children,
        });
        self.store[level].insert(lo, (hi, id));
        id
    }

    /// Nodes reachable from `root`, in depth-first preorder.
    pub fn reachable(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if seen[id] {
                continue;
            }
            seen[id] = true;
            out.push(id);
            for &c in self.nodes[id].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Graphviz rendering of the diagram below `root`.
    pub fn to_dot(&self, root: NodeId) -> String {
        let mut s = String::from("digraph mdd {\n");
        for id in self.reachable(root) {
            let n = &self.nodes[id];
            let label = match id {
                FALSE_NODE => "F".to_string(),
                TRUE_NODE => "T".to_string(),
                _ => format!("{}: [{}, {}]", id, n.lo, fmt_end(n.hi)),
            };
            let _ = writeln!(s, "  n{id} [label=\"{label}\"];");
            for (j, &c) in n.children.iter().enumerate() {
                let _ = writeln!(s, "  n{id} -> n{c} [label=\"{j}\"];");
            }
        }
        s.push_str("}\n");
        s
    }
}

fn fmt_end(x: i64) -> String {
    if x >= POS_INF {
        "inf".into()
    } else {
        x.to_string()
    }
}

/// Clause emitter for (reduced) MDDs; remembers which nodes already own a
/// variable so that later bounds only add clauses for new nodes.
///
/// A node whose children all coincide after reduction shares its child's
/// variable. Node `ν` yields `¬z_ν ∨ ¬[x ≥ j] ∨ z_{child(j)}` for every `j`
/// whose reduced child differs from that of `j - 1` (the `j = 0` clause has
/// no selector literal).
#[derive(Clone, Debug, Default)]
pub struct MddEncoder {
    reduced: HashMap<NodeId, NodeId>,
    zvars: HashMap<NodeId, Lit>,
    fresh: usize,
}

impl MddEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Node variables allocated so far, terminals excluded.
    pub fn fresh_vars(&self) -> usize {
        self.fresh
    }

    /// Representative of `id` after collapsing single-child nodes.
    pub fn reduce(&mut self, mdd: &Mdd, id: NodeId) -> NodeId {
        if mdd.is_terminal(id) {
            return id;
        }
        if let Some(&r) = self.reduced.get(&id) {
            return r;
        }
        let kids: Vec<NodeId> = mdd.node(id).children.clone();
        let first = self.reduce(mdd, kids[0]);
        let mut all_same = true;
        for &c in &kids[1..] {
            if self.reduce(mdd, c) != first {
                all_same = false;
            }
        }
        let r = if all_same { first } else { id };
        self.reduced.insert(id, r);
        r
    }

    /// The variable of a node, if it has been encoded.
    pub fn var_of(&mut self, mdd: &Mdd, id: NodeId) -> Option<Lit> {
        let r = self.reduce(mdd, id);
        self.zvars.get(&r).copied()
    }

    fn terminal_var(&mut self, db: &mut CnfBuilder, id: NodeId) -> Lit {
        if let Some(&z) = self.zvars.get(&id) {
            return z;
        }
        let (detail, unit_positive) = if id == TRUE_NODE { ("T", true) } else { ("F", false) };
        let z = db.new_lit("mdd-node", detail);
        db.add_clause([if unit_positive { z } else { !z }]);
        self.zvars.insert(id, z);
        z
    }

    /// Emits clauses for every not-yet-encoded node reachable from `root`
    /// and returns the root's literal, without asserting it.
    ///
    /// `selectors[i][j-1]` is the literal for `x_i ≥ j`.
    pub fn encode_nodes(&mut self, db: &mut CnfBuilder, mdd: &Mdd, root: NodeId, selectors: &[Vec<Lit>]) -> Lit {
        let root = self.reduce(mdd, root);
        if mdd.is_terminal(root) {
            return self.terminal_var(db, root);
        }
        if let Some(&z) = self.zvars.get(&root) {
            return z;
        }
        // allocate variables in preorder, then emit clauses
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if self.zvars.contains_key(&id) {
                continue;
            }
            if mdd.is_terminal(id) {
                self.terminal_var(db, id);
                continue;
            }
            let n = mdd.node(id);
            let z = db.new_lit("mdd-node", format!("level={} interval=[{},{}]", n.level, n.lo, fmt_end(n.hi)));
            self.zvars.insert(id, z);
            self.fresh += 1;
            order.push(id);
            let kids: Vec<NodeId> = n.children.iter().map(|&c| self.reduce(mdd, c)).collect();
            for &c in kids.iter().rev() {
                stack.push(c);
            }
        }
        for id in order {
            let level = mdd.node(id).level;
            let z = self.zvars[&id];
            let kids: Vec<NodeId> = mdd.node(id).children.clone();
            let mut prev: Option<NodeId> = None;
            for (j, &c) in kids.iter().enumerate() {
                let c = self.reduce(mdd, c);
                if prev == Some(c) {
                    continue;
                }
                prev = Some(c);
                let zc = self.zvars[&c];
                if j == 0 {
                    db.add_clause([!z, zc]);
                } else {
                    db.add_clause([!z, !selectors[level][j - 1], zc]);
                }
            }
        }
        self.zvars[&root]
    }

    /// [`MddEncoder::encode_nodes`] plus the unit asserting the root.
    pub fn encode(&mut self, db: &mut CnfBuilder, mdd: &Mdd, root: NodeId, selectors: &[Vec<Lit>]) -> Lit {
        let z = self.encode_nodes(db, mdd, root, selectors);
        if self.reduce(mdd, root) != TRUE_NODE {
            db.add_clause([z]);
        }
        z
    }
}

/// Pseudo-Boolean view of a log-encoded left-hand side: `(coef, bit)` terms
/// with `coef = 2^j · a_i`, sorted by coefficient (stably).
///
/// With `decompose`, each coefficient is additionally split into its powers
/// of two before the stable sort, so equal powers of two end up adjacent.
pub fn bdd_terms(coefs: &[i64], vars: &[LogEncoding], decompose: bool) -> Vec<(i64, Lit)> {
    let mut terms: Vec<(i64, Lit)> = Vec::new();
    for (&a, enc) in coefs.iter().zip(vars) {
        for (j, &b) in enc.bits.iter().enumerate() {
            terms.push((a << j, b));
        }
    }
    terms.sort_by_key(|t| t.0);
    if decompose {
        let mut parts = Vec::new();
        for (c, lit) in terms {
            for bit in 0..63 {
                if (c >> bit) & 1 == 1 {
                    parts.push((1i64 << bit, lit));
                }
            }
        }
        parts.sort_by_key(|t| t.0);
        terms = parts;
    }
    terms
}
