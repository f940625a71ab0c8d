//! Binary-arithmetic encodings over log-encoded variables: each term
//! `a_i · x_i` becomes a binary word by shift-and-add, the words are summed
//! with ripple-carry adders and the sum is compared with the bound.

use crate::cnf::{CnfBuilder, Lit};
use crate::model::{bits_for, lex_le_clauses, LogEncoding};
use crate::netblocks::{add_words, adder_tree, Word};

/// A binary word with a known upper bound on its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinWord {
    /// Least significant bit first; `None` is a constant zero.
    pub bits: Word,
    pub max: i64,
}

impl BinWord {
    pub fn from_log(enc: &LogEncoding) -> Self {
        BinWord {
            bits: enc.bits.iter().copied().map(Some).collect(),
            max: enc.hi - enc.lo,
        }
    }

    /// Bits as literals, constants replaced by the shared false literal.
    pub fn lits(&self, db: &mut CnfBuilder) -> Vec<Lit> {
        self.bits
            .iter()
            .map(|b| match b {
                Some(l) => *l,
                None => db.false_lit(),
            })
            .collect()
    }
}

/// Pseudo-Boolean terms `(2^j · a_i, bit_j(x_i))` in variable order.
pub fn li_to_pb(coefs: &[i64], vars: &[LogEncoding]) -> Vec<(i64, Lit)> {
    coefs
        .iter()
        .zip(vars)
        .flat_map(|(&a, enc)| enc.bits.iter().enumerate().map(move |(j, &b)| (a << j, b)))
        .collect()
}

/// Drops bits above the width needed for `max`, forcing them false.
fn trim(db: &mut CnfBuilder, mut w: BinWord) -> BinWord {
    let width = bits_for(w.max);
    while w.bits.len() > width {
        if let Some(Some(l)) = w.bits.pop() {
            db.add_clause([!l]);
        }
    }
    w
}

/// `u + v` with a ripple-carry adder; an overflow bit beyond the width of
/// `u.max + v.max` is forced false.
pub fn ripple_add(db: &mut CnfBuilder, u: &BinWord, v: &BinWord) -> BinWord {
    let bits = add_words(db, &u.bits, &v.bits);
    trim(
        db,
        BinWord {
            bits,
            max: u.max + v.max,
        },
    )
}

/// `a · u` by shift-and-add over the set bits of `a`.
pub fn const_mult(db: &mut CnfBuilder, a: i64, u: &BinWord) -> BinWord {
    assert!(a >= 0);
    let mut acc: Option<BinWord> = None;
    for k in 0..63 {
        if (a >> k) & 1 == 0 {
            continue;
        }
        let mut bits: Word = vec![None; k];
        bits.extend(u.bits.iter().copied());
        let shifted = BinWord {
            bits,
            max: u.max << k,
        };
        acc = Some(match acc {
            None => shifted,
            Some(prev) => ripple_add(db, &prev, &shifted),
        });
    }
    acc.unwrap_or(BinWord {
        bits: Vec::new(),
        max: 0,
    })
}

fn sum_tree(db: &mut CnfBuilder, words: &[BinWord]) -> BinWord {
    match words {
        [] => BinWord {
            bits: Vec::new(),
            max: 0,
        },
        [w] => w.clone(),
        _ => {
            let mid = words.len().div_ceil(2);
            let l = sum_tree(db, &words[..mid]);
            let r = sum_tree(db, &words[mid..]);
            ripple_add(db, &l, &r)
        }
    }
}

/// Adder encoding of `Σ coefs_i x_i ≤ bound`. Returns the sum word.
///
/// A cardinality constraint over single bits is counted with
/// [`adder_tree`]; otherwise each term is multiplied out and the words are
/// summed in a balanced tree.
pub fn adder_encode(db: &mut CnfBuilder, coefs: &[i64], vars: &[LogEncoding], bound: i64) -> Vec<Lit> {
    if bound < 0 {
        db.add_clause([]);
        return Vec::new();
    }
    let total: i64 = coefs.iter().zip(vars).map(|(a, v)| a * (v.hi - v.lo)).sum();
    if total <= bound {
        return Vec::new();
    }
    let is_card = coefs.iter().all(|&a| a == 1) && vars.iter().all(|v| v.hi - v.lo == 1);
    let sum = if is_card {
        let inputs: Vec<Lit> = vars.iter().map(|v| v.bits[0]).collect();
        adder_tree(db, &inputs)
    } else {
        let words: Vec<BinWord> = coefs
            .iter()
            .zip(vars)
            .map(|(&a, v)| const_mult(db, a, &BinWord::from_log(v)))
            .collect();
        sum_tree(db, &words).lits(db)
    };
    lex_le_clauses(db, &sum, bound);
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Engine;

    fn value(pa: &crate::cnf::PartialAssignment, w: &[Lit]) -> i64 {
        w.iter()
            .enumerate()
            .map(|(i, &b)| i64::from(pa.value(b).expect("bit assigned")) << i)
            .sum()
    }

    #[test]
    fn const_mult_eleven() {
        let mut db = CnfBuilder::new();
        let u = LogEncoding::new(&mut db, "u", 0, 5);
        let w = const_mult(&mut db, 11, &BinWord::from_log(&u));
        let lits = w.lits(&mut db);
        let mut e = Engine::new(&db);
        for v in 0..=5 {
            let pa = e.propagate(&u.fix(v)).unwrap();
            assert_eq!(value(&pa, &lits), 11 * v);
        }
    }

    #[test]
    fn pb_comparison_clauses() {
        // 2y1 + 3y2 + 5y3 + 6y4 <= 9
        let mut db = CnfBuilder::new();
        let ys: Vec<LogEncoding> = (0..4).map(|i| LogEncoding::new(&mut db, &format!("y{i}"), 0, 1)).collect();
        let before = db.num_clauses();
        let sum = adder_encode(&mut db, &[2, 3, 5, 6], &ys, 9);
        assert_eq!(sum.len(), 5);
        let tail = &db.clauses()[db.num_clauses() - 3..];
        assert_eq!(tail, &[vec![!sum[1], !sum[3]], vec![!sum[2], !sum[3]], vec![!sum[4]]]);
        assert!(db.num_clauses() > before + 3);
    }

    #[test]
    fn li_to_pb_example() {
        let mut db = CnfBuilder::new();
        let xs: Vec<LogEncoding> = (0..3).map(|i| LogEncoding::new(&mut db, &format!("x{i}"), 0, 2)).collect();
        let coefs: Vec<i64> = li_to_pb(&[4, 5, 6], &xs).iter().map(|t| t.0).collect();
        assert_eq!(coefs, vec![4, 8, 5, 10, 6, 12]);
    }
}
