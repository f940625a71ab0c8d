//! Circuit building blocks: half/full adders, adder trees, totalizers,
//! odd-even merges and cardinality networks.
//!
//! Sorted sequences are unary counters: output `z[k-1]` stands for "at least
//! `k` inputs are true". Merges and cardinality networks are
//! one-directional: true inputs force outputs, and false outputs propagate
//! back to the inputs, but nothing forces an output to be false.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::cnf::{CnfBuilder, Lit};

/// `(sum, carry)` of two bits, 7 clauses.
pub fn half_adder(db: &mut CnfBuilder, a: Lit, b: Lit) -> (Lit, Lit) {
    let s = db.new_lit("adder", "ha.sum");
    let c = db.new_lit("adder", "ha.carry");
    db.add_clause([!a, !b, !s]);
    db.add_clause([!a, b, s]);
    db.add_clause([a, !b, s]);
    db.add_clause([a, b, !s]);
    db.add_clause([!a, !b, c]);
    db.add_clause([a, !c]);
    db.add_clause([b, !c]);
    (s, c)
}

/// `(sum, carry)` of three bits, 14 clauses.
pub fn full_adder(db: &mut CnfBuilder, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
    let s = db.new_lit("adder", "fa.sum");
    let k = db.new_lit("adder", "fa.carry");
    for mask in 0..8u8 {
        let (x, y, z) = (mask & 4 != 0, mask & 2 != 0, mask & 1 != 0);
        let odd = (x as u8 + y as u8 + z as u8) % 2 == 1;
        db.add_clause([a.lit_if(!x), b.lit_if(!y), c.lit_if(!z), if odd { s } else { !s }]);
    }
    db.add_clause([!a, !b, k]);
    db.add_clause([!a, !c, k]);
    db.add_clause([!b, !c, k]);
    db.add_clause([a, b, !k]);
    db.add_clause([a, c, !k]);
    db.add_clause([b, c, !k]);
    (s, k)
}

trait LitExt {
    fn lit_if(self, positive: bool) -> Lit;
}

impl LitExt for Lit {
    /// `self` if `positive`, else `¬self`.
    fn lit_if(self, positive: bool) -> Lit {
        if positive {
            self
        } else {
            !self
        }
    }
}

/// A binary word, least significant bit first; `None` is a constant zero.
pub type Word = Vec<Option<Lit>>;

/// Ripple-carry sum of two words. The result is one bit wider than the
/// longer operand (the final carry), unless no carry can arise.
pub fn add_words(db: &mut CnfBuilder, u: &[Option<Lit>], v: &[Option<Lit>]) -> Word {
    let width = u.len().max(v.len());
    let mut out = Vec::with_capacity(width + 1);
    let mut carry: Option<Lit> = None;
    for i in 0..width {
        let mut present: Vec<Lit> = Vec::with_capacity(3);
        present.extend(carry);
        present.extend(u.get(i).copied().flatten());
        present.extend(v.get(i).copied().flatten());
        match present[..] {
            [] => {
                out.push(None);
                carry = None;
            }
            [x] => {
                out.push(Some(x));
                carry = None;
            }
            [x, y] => {
                let (s, c) = half_adder(db, x, y);
                out.push(Some(s));
                carry = Some(c);
            }
            [x, y, z] => {
                let (s, c) = full_adder(db, x, y, z);
                out.push(Some(s));
                carry = Some(c);
            }
            _ => unreachable!(),
        }
    }
    if carry.is_some() {
        out.push(carry);
    }
    out
}

/// Binary count of the inputs: a full adder for three inputs, a half adder
/// for two, otherwise the halves (larger first) are counted and added.
pub fn adder_tree(db: &mut CnfBuilder, inputs: &[Lit]) -> Vec<Lit> {
    fn rec(db: &mut CnfBuilder, xs: &[Lit]) -> Word {
        match *xs {
            [] => Vec::new(),
            [a] => vec![Some(a)],
            [a, b] => {
                let (s, c) = half_adder(db, a, b);
                vec![Some(s), Some(c)]
            }
            [a, b, c] => {
                let (s, k) = full_adder(db, a, b, c);
                vec![Some(s), Some(k)]
            }
            _ => {
                let mid = xs.len().div_ceil(2);
                let l = rec(db, &xs[..mid]);
                let r = rec(db, &xs[mid..]);
                add_words(db, &l, &r)
            }
        }
    }
    rec(db, inputs)
        .into_iter()
        .map(|b| b.expect("adder tree bits are never constant"))
        .collect()
}

/// Clause layout of a totalizer node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TotalizerStyle {
    /// `w_i ∧ w'_j → z_{i+j}` and `¬w_{i+1} ∧ ¬w'_{j+1} → ¬z_{i+j+1}`:
    /// quadratic per node.
    #[default]
    Compact,
    /// Each output defined as the disjunction of pair conjunctions and
    /// converted to CNF by distribution; exponential per node, only
    /// sensible for small inputs.
    Distributed,
}

/// Totalizer over `inputs`, outputs truncated at `cap` (`z_cap` then means
/// "at least `cap`"). [`TotalizerStyle::Distributed`] ignores truncation.
pub fn totalizer(db: &mut CnfBuilder, inputs: &[Lit], cap: usize, style: TotalizerStyle) -> Vec<Lit> {
    if inputs.len() <= 1 {
        return inputs.iter().copied().take(cap).collect();
    }
    let mid = inputs.len().div_ceil(2);
    let w = totalizer(db, &inputs[..mid], cap, style);
    let v = totalizer(db, &inputs[mid..], cap, style);
    let (p, q) = (w.len(), v.len());
    let n_out = match style {
        TotalizerStyle::Compact => (p + q).min(cap),
        TotalizerStyle::Distributed => p + q,
    };
    let z: Vec<Lit> = (1..=n_out).map(|k| db.new_lit("totalizer", format!("sum>={k}"))).collect();
    match style {
        TotalizerStyle::Compact => {
            for i in 0..=p {
                for j in 0..=q {
                    let k = i + j;
                    if k >= 1 && k <= n_out {
                        let mut c = Vec::with_capacity(3);
                        if i > 0 {
                            c.push(!w[i - 1]);
                        }
                        if j > 0 {
                            c.push(!v[j - 1]);
                        }
                        c.push(z[k - 1]);
                        db.add_clause(c);
                    }
                    if k < n_out {
                        let mut c = Vec::with_capacity(3);
                        if i < p {
                            c.push(w[i]);
                        }
                        if j < q {
                            c.push(v[j]);
                        }
                        c.push(!z[k]);
                        db.add_clause(c);
                    }
                }
            }
        }
        TotalizerStyle::Distributed => {
            for k in 1..=n_out {
                // terms of the disjunction: (w_i, w'_j) with i + j = k
                let mut terms: Vec<Vec<Lit>> = Vec::new();
                for i in k.saturating_sub(q)..=k.min(p) {
                    let j = k - i;
                    let mut t = Vec::new();
                    if i > 0 {
                        t.push(w[i - 1]);
                    }
                    if j > 0 {
                        t.push(v[j - 1]);
                    }
                    terms.push(t);
                }
                for t in &terms {
                    db.add_clause(t.iter().map(|&l| !l).chain([z[k - 1]]));
                }
                // z_k → ⋁ terms, distributed
                let mut partial: Vec<Vec<Lit>> = vec![vec![!z[k - 1]]];
                for t in &terms {
                    let mut next = Vec::with_capacity(partial.len() * t.len());
                    for c in &partial {
                        for &l in t {
                            let mut c2 = c.clone();
                            c2.push(l);
                            next.push(c2);
                        }
                    }
                    partial = next;
                }
                for c in partial {
                    db.add_clause(c);
                }
            }
        }
    }
    z
}

/// 2-comparator: `max = a ∨ b` (upward only), optionally `min = a ∧ b`.
fn comparator(db: &mut CnfBuilder, a: Lit, b: Lit, need_min: bool) -> (Lit, Option<Lit>) {
    let hi = db.new_lit("network", "cmp.max");
    db.add_clause([!a, hi]);
    db.add_clause([!b, hi]);
    let lo = need_min.then(|| {
        let lo = db.new_lit("network", "cmp.min");
        db.add_clause([!a, !b, lo]);
        lo
    });
    (hi, lo)
}

/// Sorts `inputs` by listing every subset: `z_k` follows from any `k`
/// inputs. No auxiliary variables besides the outputs.
pub fn direct_sort(db: &mut CnfBuilder, inputs: &[Lit], cap: usize) -> Vec<Lit> {
    let n = inputs.len();
    if n <= 1 {
        return inputs.iter().copied().take(cap).collect();
    }
    let m = n.min(cap);
    let z: Vec<Lit> = (1..=m).map(|k| db.new_lit("network", format!("sort>={k}"))).collect();
    for k in 1..=m {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            db.add_clause(idx.iter().map(|&i| !inputs[i]).chain([z[k - 1]]));
            // next k-combination in lexicographic order
            let mut t = k;
            while t > 0 && idx[t - 1] == n - k + t - 1 {
                t -= 1;
            }
            if t == 0 {
                break;
            }
            idx[t - 1] += 1;
            for s in t..k {
                idx[s] = idx[s - 1] + 1;
            }
        }
    }
    z
}

/// Merges two sorted sequences directly: `a_i ∧ b_j → z_{i+j}`.
pub fn direct_merge(db: &mut CnfBuilder, a: &[Lit], b: &[Lit], cap: usize) -> Vec<Lit> {
    let a = &a[..a.len().min(cap)];
    let b = &b[..b.len().min(cap)];
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    let m = (a.len() + b.len()).min(cap);
    let z: Vec<Lit> = (1..=m).map(|k| db.new_lit("network", format!("merge>={k}"))).collect();
    for k in 1..=m {
        for i in k.saturating_sub(b.len())..=k.min(a.len()) {
            let j = k - i;
            let mut c = Vec::with_capacity(3);
            if i > 0 {
                c.push(!a[i - 1]);
            }
            if j > 0 {
                c.push(!b[j - 1]);
            }
            c.push(z[k - 1]);
            db.add_clause(c);
        }
    }
    z
}

fn odd_even_split(xs: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
    let odd = xs.iter().step_by(2).copied().collect();
    let even = xs.iter().skip(1).step_by(2).copied().collect();
    (odd, even)
}

/// Batcher's odd-even merge for arbitrary lengths, truncated to the first
/// `cap` outputs. Sub-merges go through [`simplified_merge`].
pub fn oe_merge(db: &mut CnfBuilder, a: &[Lit], b: &[Lit], cap: usize) -> Vec<Lit> {
    let a = &a[..a.len().min(cap)];
    let b = &b[..b.len().min(cap)];
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    let c = (a.len() + b.len()).min(cap);
    if a.len() == 1 && b.len() == 1 {
        let (hi, lo) = comparator(db, a[0], b[0], c >= 2);
        return std::iter::once(hi).chain(lo).collect();
    }
    let (ao, ae) = odd_even_split(a);
    let (bo, be) = odd_even_split(b);
    let v = simplified_merge(db, &ao, &bo, c / 2 + 1);
    let w = simplified_merge(db, &ae, &be, c / 2);
    let mut out = vec![v[0]];
    let mut i = 1;
    while out.len() < c {
        match (w.get(i - 1), v.get(i)) {
            (Some(&x), Some(&y)) => {
                let need_min = out.len() + 2 <= c;
                let (hi, lo) = comparator(db, x, y, need_min);
                out.push(hi);
                out.extend(lo);
            }
            (Some(&x), None) | (None, Some(&x)) => out.push(x),
            (None, None) => break,
        }
        i += 1;
    }
    out
}

/// `(variables, clauses)` for a merge of sizes `p`, `q` truncated at `c`.
type Cost = (usize, usize);

fn direct_merge_cost(p: usize, q: usize, c: usize) -> Cost {
    let (p, q) = (p.min(c), q.min(c));
    if p == 0 || q == 0 {
        return (0, 0);
    }
    let m = (p + q).min(c);
    let clauses = (1..=m).map(|k| k.min(p) - k.saturating_sub(q) + 1).sum();
    (m, clauses)
}

fn oe_merge_cost(p: usize, q: usize, c: usize) -> Cost {
    let (p, q) = (p.min(c), q.min(c));
    if p == 0 || q == 0 {
        return (0, 0);
    }
    let c = (p + q).min(c);
    if p == 1 && q == 1 {
        return if c >= 2 { (2, 3) } else { (1, 2) };
    }
    let vlen = p.div_ceil(2) + q.div_ceil(2);
    let wlen = p / 2 + q / 2;
    let cv = vlen.min(c / 2 + 1);
    let cw = wlen.min(c / 2);
    let sv = merge_cost(p.div_ceil(2), q.div_ceil(2), c / 2 + 1);
    let sw = merge_cost(p / 2, q / 2, c / 2);
    let (mut vars, mut clauses) = (sv.0 + sw.0, sv.1 + sw.1);
    let mut len = 1;
    let mut i = 1;
    while len < c {
        match (i <= cw, i < cv) {
            (true, true) => {
                if len + 2 <= c {
                    vars += 2;
                    clauses += 3;
                    len += 2;
                } else {
                    vars += 1;
                    clauses += 2;
                    len += 1;
                }
            }
            (true, false) | (false, true) => len += 1,
            (false, false) => break,
        }
        i += 1;
    }
    (vars, clauses)
}

thread_local! {
    static MERGE_CHOICE: RefCell<HashMap<(usize, usize, usize), (bool, Cost)>> = RefCell::new(HashMap::new());
}

/// Chooses between the direct and the recursive merge; returns
/// `(use_direct, cost)`.
fn merge_choice(p: usize, q: usize, c: usize) -> (bool, Cost) {
    let key = (p.min(c), q.min(c), c.min(p + q));
    if let Some(hit) = MERGE_CHOICE.with(|m| m.borrow().get(&key).copied()) {
        return hit;
    }
    let d = direct_merge_cost(key.0, key.1, key.2);
    let r = oe_merge_cost(key.0, key.1, key.2);
    let choice = if r.0 + r.1 < d.0 + d.1 { (false, r) } else { (true, d) };
    MERGE_CHOICE.with(|m| m.borrow_mut().insert(key, choice));
    choice
}

fn merge_cost(p: usize, q: usize, c: usize) -> Cost {
    merge_choice(p, q, c).1
}

/// Merge of two sorted sequences truncated to `cap` outputs, using the
/// direct construction whenever it is no larger than the recursive one.
pub fn simplified_merge(db: &mut CnfBuilder, a: &[Lit], b: &[Lit], cap: usize) -> Vec<Lit> {
    if merge_choice(a.len(), b.len(), cap).0 {
        direct_merge(db, a, b, cap)
    } else {
        oe_merge(db, a, b, cap)
    }
}

/// Input size up to which [`card_network`] sorts directly.
pub const DIRECT_SORT_MAX: usize = 4;

/// Cardinality network: sorts `inputs` keeping only the first `cap`
/// outputs. Halves (larger first) are sorted recursively and merged with
/// [`simplified_merge`]; up to [`DIRECT_SORT_MAX`] inputs are sorted
/// directly.
pub fn card_network(db: &mut CnfBuilder, inputs: &[Lit], cap: usize) -> Vec<Lit> {
    if inputs.len() <= DIRECT_SORT_MAX {
        return direct_sort(db, inputs, cap);
    }
    let mid = inputs.len().div_ceil(2);
    let l = card_network(db, &inputs[..mid], cap);
    let r = card_network(db, &inputs[mid..], cap);
    simplified_merge(db, &l, &r, cap)
}

/// Full sorting network.
pub fn oe_sort(db: &mut CnfBuilder, inputs: &[Lit]) -> Vec<Lit> {
    card_network(db, inputs, inputs.len())
}

/// Order in which [`merge_runs`] combines runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MergeOrder {
    /// Always merge the two shortest runs.
    #[default]
    Greedy,
    /// Fold left to right.
    Sequential,
}

/// Merges already-sorted runs into one sorted sequence truncated at `cap`.
pub fn merge_runs(db: &mut CnfBuilder, runs: Vec<Vec<Lit>>, cap: usize, order: MergeOrder) -> Vec<Lit> {
    let mut runs: Vec<Vec<Lit>> = runs
        .into_iter()
        .filter(|r| !r.is_empty())
        .map(|mut r| {
            r.truncate(cap);
            r
        })
        .collect();
    match order {
        MergeOrder::Sequential => {
            let mut it = runs.into_iter();
            let Some(mut acc) = it.next() else {
                return Vec::new();
            };
            for r in it {
                acc = simplified_merge(db, &acc, &r, cap);
            }
            acc
        }
        MergeOrder::Greedy => {
            if runs.is_empty() {
                return Vec::new();
            }
            let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
            for (i, r) in runs.iter().enumerate() {
                heap.push(Reverse((r.len(), i)));
            }
            while heap.len() > 1 {
                let Reverse((_, i)) = heap.pop().unwrap();
                let Reverse((_, j)) = heap.pop().unwrap();
                let a = std::mem::take(&mut runs[i]);
                let b = std::mem::take(&mut runs[j]);
                let m = simplified_merge(db, &a, &b, cap);
                heap.push(Reverse((m.len(), runs.len())));
                runs.push(m);
            }
            let Reverse((_, i)) = heap.pop().unwrap();
            std::mem::take(&mut runs[i])
        }
    }
}

/// Cost (variables, clauses) of [`merge_runs`] on runs of the given
/// lengths, without emitting anything.
pub fn merge_runs_cost(lens: &[usize], cap: usize, order: MergeOrder) -> (usize, usize) {
    let mut lens: Vec<usize> = lens.iter().filter(|&&l| l > 0).map(|&l| l.min(cap)).collect();
    let (mut vars, mut clauses) = (0, 0);
    let mut step = |a: usize, b: usize| {
        let (v, c) = merge_cost(a, b, cap);
        vars += v;
        clauses += c;
        (a + b).min(cap)
    };
    match order {
        MergeOrder::Sequential => {
            let mut it = lens.into_iter();
            if let Some(mut acc) = it.next() {
                for l in it {
                    acc = step(acc, l);
                }
            }
        }
        MergeOrder::Greedy => {
            let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
                lens.drain(..).enumerate().map(|(i, l)| Reverse((l, i))).collect();
            let mut next = heap.len();
            while heap.len() > 1 {
                let Reverse((a, _)) = heap.pop().unwrap();
                let Reverse((b, _)) = heap.pop().unwrap();
                heap.push(Reverse((step(a, b), next)));
                next += 1;
            }
        }
    }
    (vars, clauses)
}
