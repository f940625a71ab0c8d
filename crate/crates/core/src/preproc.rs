//! Coefficient grouping: terms sharing a coefficient are summed by a
//! merge network first, and the network outputs serve as the order
//! encoding of the sum in a smaller residual constraint.

use std::collections::BTreeMap;

use crate::cnf::{CnfBuilder, Lit};
use crate::model::{NormTerm, NormalizedLI, Subst};
use crate::netblocks::{merge_runs, MergeOrder};

/// Variable index used for the synthetic sum variables of a residual.
pub const GROUP_VAR: usize = usize::MAX;

/// A constraint together with the order-encoding selectors of its terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouped {
    pub li: NormalizedLI,
    pub selectors: Vec<Vec<Lit>>,
    /// Number of groups replaced by sums.
    pub groups: usize,
}

/// Replaces every group of two or more equal-coefficient terms by one sum
/// variable `s ∈ [0, min(⌊bound/a⌋, Σ d)]`.
///
/// The merge network keeps one extra output when the members can exceed
/// `⌊bound/a⌋`; that output is forced false, because such a sum alone
/// violates the constraint. Groups are built in order of descending size,
/// then ascending coefficient; in the residual, a sum takes the place of its
/// first member.
pub fn group_coefficients(db: &mut CnfBuilder, li: &NormalizedLI, selectors: &[Vec<Lit>]) -> Grouped {
    let mut by_coef: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, t) in li.terms.iter().enumerate() {
        by_coef.entry(t.coef).or_default().push(i);
    }
    let mut groups: Vec<(i64, Vec<usize>)> = by_coef.into_iter().filter(|(_, m)| m.len() >= 2).collect();
    if li.bound < 0 || groups.is_empty() {
        return Grouped {
            li: li.clone(),
            selectors: selectors.to_vec(),
            groups: 0,
        };
    }
    groups.sort_by_key(|(a, m)| (std::cmp::Reverse(m.len()), *a));
    // first member index → (coef, dom, selectors)
    let mut replacement: BTreeMap<usize, (i64, Vec<Lit>)> = BTreeMap::new();
    let mut absorbed = vec![false; li.len()];
    for (a, members) in &groups {
        let total: i64 = members.iter().map(|&i| li.terms[i].dom).sum();
        let ds = (li.bound / a).min(total);
        let cap = if total > ds { ds + 1 } else { ds } as usize;
        let runs: Vec<Vec<Lit>> = members.iter().map(|&i| selectors[i].clone()).collect();
        let out = merge_runs(db, runs, cap, MergeOrder::Greedy);
        if cap > ds as usize {
            db.add_clause([!out[ds as usize]]);
        }
        let sel: Vec<Lit> = out[..ds as usize].to_vec();
        for w in sel.windows(2) {
            db.add_clause([!w[1], w[0]]);
        }
        for &i in members {
            absorbed[i] = true;
        }
        replacement.insert(members[0], (*a, sel));
    }
    let mut terms = Vec::new();
    let mut sels = Vec::new();
    for (i, t) in li.terms.iter().enumerate() {
        if let Some((a, sel)) = replacement.remove(&i) {
            if !sel.is_empty() {
                terms.push(NormTerm {
                    coef: a,
                    dom: sel.len() as i64,
                    var: GROUP_VAR,
                    subst: Subst::Shift { lo: 0 },
                });
                sels.push(sel);
            }
        } else if !absorbed[i] {
            terms.push(*t);
            sels.push(selectors[i].clone());
        }
    }
    Grouped {
        li: NormalizedLI { terms, bound: li.bound },
        selectors: sels,
        groups: groups.len(),
    }
}
