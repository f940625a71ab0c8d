//! Partial-sum ("support") encoding: order-encoded prefix sums
//! `s_i = a_1 x_1 + … + a_i x_i`, with one threshold literal per reachable
//! value up to the bound and a single saturated "exceeds" literal.

use std::collections::BTreeMap;

use crate::cnf::{CnfBuilder, Lit};

/// Threshold literals of one prefix sum: `value → (s_i ≥ value)`.
pub type Thresholds = BTreeMap<i64, Lit>;

/// Encodes `Σ coefs_i x_i ≤ bound` with clauses
/// `s_{i-1} ≥ β ∧ x_i ≥ γ → s_i ≥ min(β + a_i γ, bound + 1)` and the unit
/// `¬(s_n ≥ bound + 1)`. Returns the thresholds of every prefix sum.
pub fn support_encode(db: &mut CnfBuilder, coefs: &[i64], selectors: &[Vec<Lit>], bound: i64) -> Vec<Thresholds> {
    if bound < 0 {
        db.add_clause([]);
        return Vec::new();
    }
    let total: i64 = coefs.iter().zip(selectors).map(|(a, s)| a * s.len() as i64).sum();
    if total <= bound {
        return Vec::new();
    }
    let exceed = bound + 1;
    let mut levels: Vec<Thresholds> = Vec::with_capacity(coefs.len());
    let mut prev: Thresholds = Thresholds::new();
    for (i, (&a, sel)) in coefs.iter().zip(selectors).enumerate() {
        let d = sel.len() as i64;
        let mut cur = Thresholds::new();
        let mut clauses: Vec<(Option<Lit>, Option<Lit>, i64)> = Vec::new();
        let prev_vals: Vec<(i64, Option<Lit>)> =
            std::iter::once((0, None)).chain(prev.iter().map(|(&v, &l)| (v, Some(l)))).collect();
        for &(beta, sb) in &prev_vals {
            for gamma in 0..=d {
                if beta == 0 && gamma == 0 {
                    continue;
                }
                let t = (beta + a * gamma).min(exceed);
                let xl = (gamma > 0).then(|| sel[gamma as usize - 1]);
                clauses.push((sb, xl, t));
                cur.entry(t).or_insert_with(|| {
                    let label = if t == exceed { format!("s{}>bound", i + 1) } else { format!("s{}>={t}", i + 1) };
                    db.new_lit("support", label)
                });
            }
        }
        for (sb, xl, t) in clauses {
            let concl = cur[&t];
            db.add_clause(sb.map(|l| !l).into_iter().chain(xl.map(|l| !l)).chain([concl]));
        }
        levels.push(cur.clone());
        prev = cur;
    }
    if let Some(&e) = prev.get(&exceed) {
        db.add_clause([!e]);
    }
    levels
}
