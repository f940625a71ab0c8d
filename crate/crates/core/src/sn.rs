//! Digit-wise sorting-network encodings.
//!
//! Coefficients are written in base `b`. Layer `j` counts, in unary, the
//! `j`-th digits of all terms (each order bit of `x_i` replicated
//! `digit_j(a_i)` times) plus every `b`-th output of layer `j - 1` (the
//! carries). Counting uses merges of already-sorted runs.
//!
//! * **Tare** adds the constant `b^{m+1} - 1 - a0` to the left-hand side so
//!   that the constraint becomes "the top layer stays below `b`".
//! * **Opt** reads each layer's digit through the `o` literals,
//!   `o_j^k ⇔ (y_j mod b) ≥ k`, so that any bound can be stated later with
//!   a handful of clauses over the same network.

use crate::cnf::{CnfBuilder, Lit};
use crate::netblocks::{merge_runs, MergeOrder};

/// Base-`b` digits of `v ≥ 0`, least significant first (empty for 0).
pub fn digits(mut v: i64, b: i64) -> Vec<i64> {
    assert!(b >= 2 && v >= 0);
    let mut out = Vec::new();
    while v > 0 {
        out.push(v % b);
        v /= b;
    }
    out
}

/// `(m, tare)` with `b^m ≤ a0 < b^{m+1}` (`m = 0` for `a0 = 0`) and
/// `tare = b^{m+1} - 1 - a0`.
pub fn tare(a0: i64, b: i64) -> (usize, i64) {
    assert!(a0 >= 0);
    let mut m = 0;
    let mut p = b; // b^{m+1}
    while p - 1 < a0 {
        m += 1;
        p *= b;
    }
    (m, p - 1 - a0)
}

/// Which formulation of the digit encoding to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnMode {
    Tare,
    Opt,
}

/// Size-saving options; all enabled by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnConfig {
    pub order: MergeOrder,
    /// Keep only the outputs a later layer can read (tare mode).
    pub truncate: bool,
    /// Drop layers above the most significant coefficient digit and move
    /// the bound to the equivalent output of the last kept layer (tare mode).
    pub elide: bool,
}

impl Default for SnConfig {
    fn default() -> Self {
        SnConfig {
            order: MergeOrder::Greedy,
            truncate: true,
            elide: true,
        }
    }
}

impl SnConfig {
    /// The construction without any of the size optimizations.
    pub fn plain() -> Self {
        SnConfig {
            order: MergeOrder::Sequential,
            truncate: false,
            elide: false,
        }
    }
}

/// Inputs of one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    /// `(variable, copies)`: each order bit of the variable enters `copies`
    /// times.
    pub terms: Vec<(usize, i64)>,
    /// Constant true inputs (tare digit).
    pub tare: i64,
    /// Outputs to keep, `None` for all.
    pub cap: Option<usize>,
}

/// Layer structure for one constraint and base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerPlan {
    pub base: i64,
    /// Index of the most significant digit position.
    pub m: usize,
    pub layers: Vec<LayerSpec>,
    /// Tare mode: the output of the last layer that must be false.
    pub bound_output: Option<usize>,
}

/// Computes the layer plan for `Σ coefs_i x_i` (`x_i ∈ [0, doms_i]`).
///
/// In tare mode `bound` must be non-negative and every coefficient at most
/// `bound`; in opt mode `bound` is ignored.
pub fn plan_layers(coefs: &[i64], doms: &[i64], bound: i64, b: i64, mode: SnMode, cfg: SnConfig) -> LayerPlan {
    let digs: Vec<Vec<i64>> = coefs.iter().map(|&a| digits(a, b)).collect();
    let top_digit = digs.iter().map(|d| d.len().saturating_sub(1)).max().unwrap_or(0);
    let (m, tare_val) = match mode {
        SnMode::Tare => tare(bound, b),
        SnMode::Opt => {
            let total: i64 = coefs.iter().zip(doms).map(|(a, d)| a * d).sum();
            (tare(total, b).0, 0)
        }
    };
    let tare_digs = digits(tare_val, b);
    let tare_at = |j: usize| tare_digs.get(j).copied().unwrap_or(0);
    let mut last = m;
    let mut caps: Vec<Option<usize>> = vec![None; m + 1];
    let mut bound_output = None;
    if mode == SnMode::Tare {
        // thresholds: t_m = b, t_{j-1} = b (t_j - T_j)
        let mut t = vec![0i64; m + 1];
        t[m] = b;
        for j in (1..=m).rev() {
            debug_assert!(t[j] > tare_at(j));
            t[j - 1] = b * (t[j] - tare_at(j));
        }
        if cfg.elide {
            last = top_digit.min(m);
        }
        bound_output = Some(t[last] as usize);
        if cfg.truncate {
            for j in 0..=last {
                caps[j] = Some(t[j] as usize);
            }
        }
    }
    let layers = (0..=last)
        .map(|j| LayerSpec {
            terms: digs
                .iter()
                .enumerate()
                .filter_map(|(i, d)| d.get(j).filter(|&&x| x > 0 && doms[i] > 0).map(|&x| (i, x)))
                .collect(),
            tare: tare_at(j),
            cap: caps[j],
        })
        .collect();
    LayerPlan {
        base: b,
        m,
        layers,
        bound_output,
    }
}

/// Outputs of a built network.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SnNetwork {
    pub base: i64,
    pub m: usize,
    /// `layers[j][l-1]` is `y_j ≥ l`; tare constants come first.
    pub layers: Vec<Vec<Lit>>,
}

/// Builds the layer networks of `plan`; `selectors[i][v-1]` is `x_i ≥ v`.
pub fn build_layers(db: &mut CnfBuilder, plan: &LayerPlan, selectors: &[Vec<Lit>], order: MergeOrder) -> SnNetwork {
    let b = plan.base as usize;
    let mut layers: Vec<Vec<Lit>> = Vec::with_capacity(plan.layers.len());
    for (j, spec) in plan.layers.iter().enumerate() {
        let mut runs: Vec<Vec<Lit>> = Vec::new();
        if j > 0 {
            let carries: Vec<Lit> = layers[j - 1].iter().skip(b - 1).step_by(b).copied().collect();
            runs.push(carries);
        }
        for &(i, copies) in &spec.terms {
            let mut run = Vec::with_capacity(selectors[i].len() * copies as usize);
            for &bit in &selectors[i] {
                run.extend(std::iter::repeat_n(bit, copies as usize));
            }
            runs.push(run);
        }
        let tare = spec.tare as usize;
        let cap = spec.cap.map_or(usize::MAX, |c| c.saturating_sub(tare));
        let merged = merge_runs(db, runs, cap, order);
        let mut out = Vec::with_capacity(tare + merged.len());
        if tare > 0 {
            let t = db.true_lit();
            out.extend(std::iter::repeat_n(t, tare));
        }
        out.extend(merged);
        layers.push(out);
    }
    SnNetwork {
        base: plan.base,
        m: plan.m,
        layers,
    }
}

/// Tightens domains to `x_i ≤ ⌊bound / a_i⌋` with unit clauses and returns
/// the effective domains.
fn clamp_domains(db: &mut CnfBuilder, coefs: &[i64], selectors: &[Vec<Lit>], bound: i64) -> Vec<i64> {
    coefs
        .iter()
        .zip(selectors)
        .map(|(&a, sel)| {
            let d = sel.len() as i64;
            let cap = (bound / a).min(d);
            if cap < d {
                db.add_clause([!sel[cap as usize]]);
            }
            cap
        })
        .collect()
}

/// Result of the tare encoding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SnTareEncoding {
    pub network: SnNetwork,
    /// The output forced false, if any.
    pub bound_lit: Option<Lit>,
}

/// Tare encoding of `Σ coefs_i x_i ≤ bound` with base `b`. With `assert`,
/// the bound literal is added as a unit; otherwise only the network is
/// built.
pub fn sn_tare_encode(
    db: &mut CnfBuilder,
    coefs: &[i64],
    selectors: &[Vec<Lit>],
    bound: i64,
    b: i64,
    cfg: SnConfig,
    assert: bool,
) -> SnTareEncoding {
    if bound < 0 {
        db.add_clause([]);
        return SnTareEncoding::default();
    }
    let total: i64 = coefs.iter().zip(selectors).map(|(a, s)| a * s.len() as i64).sum();
    if total <= bound {
        return SnTareEncoding::default();
    }
    let doms = clamp_domains(db, coefs, selectors, bound);
    let sels: Vec<Vec<Lit>> = selectors
        .iter()
        .zip(&doms)
        .map(|(s, &d)| s[..d as usize].to_vec())
        .collect();
    let total: i64 = coefs.iter().zip(&doms).map(|(a, d)| a * d).sum();
    if total <= bound {
        return SnTareEncoding::default();
    }
    let plan = plan_layers(coefs, &doms, bound, b, SnMode::Tare, cfg);
    let network = build_layers(db, &plan, &sels, cfg.order);
    let want = plan.bound_output.expect("tare plans carry a bound");
    let bound_lit = network.layers.last().and_then(|y| y.get(want - 1)).copied();
    if assert {
        if let Some(l) = bound_lit {
            db.add_clause([!l]);
        }
    }
    SnTareEncoding { network, bound_lit }
}

/// A digit literal `o_j^k` together with the terms defining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitLit {
    pub lit: Lit,
    /// `(y^l, y^{l+b-k})` pairs; a missing second literal means false.
    pub terms: Vec<(Lit, Option<Lit>)>,
}

/// Network plus digit literals for incremental bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnOptEncoding {
    pub network: SnNetwork,
    /// `digits[j][k-1]` is `o_j^k` for `k ∈ 1..b`.
    pub digits: Vec<Vec<DigitLit>>,
}

impl SnOptEncoding {
    /// Largest bound that still needs clauses, `b^{m+1} - 1`.
    pub fn capacity(&self) -> i64 {
        self.network.base.pow(self.network.m as u32 + 1) - 1
    }

    pub fn o(&self, j: usize, k: usize) -> Lit {
        self.digits[j][k - 1].lit
    }
}

/// Builds the bound-independent part of the opt encoding: the layer
/// networks and the digit literals `o_j^k` (defined by `term → o_j^k`).
pub fn sn_opt_encode(db: &mut CnfBuilder, coefs: &[i64], selectors: &[Vec<Lit>], b: i64, cfg: SnConfig) -> SnOptEncoding {
    let doms: Vec<i64> = selectors.iter().map(|s| s.len() as i64).collect();
    let plan = plan_layers(coefs, &doms, 0, b, SnMode::Opt, cfg);
    let network = build_layers(db, &plan, selectors, cfg.order);
    let bu = b as usize;
    let mut digit_lits = Vec::with_capacity(network.layers.len());
    for (j, y) in network.layers.iter().enumerate() {
        let e = y.len();
        let mut row = Vec::with_capacity(bu - 1);
        for k in 1..bu {
            let terms: Vec<(Lit, Option<Lit>)> = (k..=e)
                .step_by(bu)
                .map(|l| (y[l - 1], y.get(l + bu - k - 1).copied()))
                .collect();
            let lit = match terms[..] {
                [] => db.false_lit(),
                [(l, None)] => l,
                _ => {
                    let o = db.new_lit("sn-digit", format!("o{j}>={k}"));
                    for &(p, n) in &terms {
                        db.add_clause([!p].into_iter().chain(n).chain([o]));
                    }
                    o
                }
            };
            row.push(DigitLit { lit, terms });
        }
        digit_lits.push(row);
    }
    SnOptEncoding {
        network,
        digits: digit_lits,
    }
}

/// Adds the clauses stating `Σ a_i x_i ≤ bound` over the digit literals:
/// for every position `j1` whose bound digit `ε_{j1}` is below `b - 1`,
/// `¬o_{j1}^{ε_{j1}+1} ∨ ⋁_{j2 > j1, ε_{j2} > 0} ¬o_{j2}^{ε_{j2}}`.
pub fn sn_opt_bound(db: &mut CnfBuilder, enc: &SnOptEncoding, bound: i64) {
    if bound < 0 {
        db.add_clause([]);
        return;
    }
    if bound >= enc.capacity() {
        return;
    }
    let b = enc.network.base;
    let m = enc.network.m;
    let mut eps = digits(bound, b);
    eps.resize(m + 1, 0);
    for j1 in 0..=m {
        if eps[j1] >= b - 1 {
            continue;
        }
        let mut clause = vec![!enc.o(j1, eps[j1] as usize + 1)];
        for (j2, &e) in eps.iter().enumerate().skip(j1 + 1) {
            if e > 0 {
                clause.push(!enc.o(j2, e as usize));
            }
        }
        db.add_clause(clause);
    }
}

/// Tare-mode clause count for base `b`, measured on a scratch store.
pub fn tare_cost(coefs: &[i64], doms: &[i64], bound: i64, b: i64, cfg: SnConfig) -> usize {
    let mut scratch = CnfBuilder::new();
    let sels = scratch_selectors(&mut scratch, doms);
    let before = scratch.num_clauses();
    sn_tare_encode(&mut scratch, coefs, &sels, bound, b, cfg, true);
    scratch.num_clauses() - before
}

/// Opt-mode clause count for base `b` (network plus one bound).
pub fn opt_cost(coefs: &[i64], doms: &[i64], bound: i64, b: i64, cfg: SnConfig) -> usize {
    let mut scratch = CnfBuilder::new();
    let sels = scratch_selectors(&mut scratch, doms);
    let before = scratch.num_clauses();
    let enc = sn_opt_encode(&mut scratch, coefs, &sels, b, cfg);
    sn_opt_bound(&mut scratch, &enc, bound);
    scratch.num_clauses() - before
}

fn scratch_selectors(db: &mut CnfBuilder, doms: &[i64]) -> Vec<Vec<Lit>> {
    doms.iter()
        .map(|&d| (0..d).map(|_| db.new_lit("order", "")).collect())
        .collect()
}

/// Smallest base in `2..=10` minimizing `cost` (ties go to the smaller base).
pub fn best_base(cost: impl Fn(i64) -> usize) -> i64 {
    (2..=10).min_by_key(|&b| (cost(b), b)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_examples() {
        assert_eq!(digits(3, 3), vec![0, 1]);
        assert_eq!(digits(5, 3), vec![2, 1]);
        assert_eq!(digits(11, 3), vec![2, 0, 1]);
        assert_eq!(digits(0, 3), Vec::<i64>::new());
    }

    #[test]
    fn tare_examples() {
        assert_eq!(tare(15, 3), (2, 11));
        assert_eq!(tare(9, 2), (3, 6));
        assert_eq!(tare(26, 3), (2, 0));
        assert_eq!(tare(0, 2), (0, 1));
        assert_eq!(tare(9, 3), (2, 17));
    }

    #[test]
    fn plain_plan_input_counts() {
        let plan = plan_layers(&[3, 2, 5], &[4, 2, 3], 15, 3, SnMode::Tare, SnConfig::plain());
        assert_eq!(plan.m, 2);
        assert_eq!(plan.layers.len(), 3);
        assert_eq!(plan.layers[0].terms, vec![(1, 2), (2, 2)]);
        assert_eq!(plan.layers[0].tare, 2);
        assert_eq!(plan.layers[1].terms, vec![(0, 1), (2, 1)]);
        assert_eq!(plan.layers[2].tare, 1);
        assert_eq!(plan.bound_output, Some(3));
        let elided = plan_layers(&[3, 2, 5], &[4, 2, 3], 15, 3, SnMode::Tare, SnConfig::default());
        assert_eq!(elided.layers.len(), 2);
        assert_eq!(elided.bound_output, Some(6));
        assert_eq!(elided.layers[1].cap, Some(6));
        assert_eq!(elided.layers[0].cap, Some(18));
    }

    #[test]
    fn base_choice_is_deterministic() {
        let c = |b: i64| tare_cost(&[3, 2, 5], &[4, 2, 3], 15, b, SnConfig::default());
        assert_eq!(best_base(c), best_base(c));
    }
}
