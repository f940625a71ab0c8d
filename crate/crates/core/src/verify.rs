//! Executable oracles: the propagator induced by an encoding, analytic
//! consistency and domain-consistency propagators, brute-force enumeration
//! and a seeded property harness tying them together.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{CnfBuilder, Engine, Lit, SolveOutcome};
use crate::encode::{encode_constraint, encode_model, EncodeError, EncodeOptions, EncodingArtifact, Method};
use crate::model::{DomainBox, IntEncoding, Model, NormalizedLI};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("search space of {size} points exceeds the cap of {cap}")]
    TooLarge { size: u128, cap: u128 },
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
}

/// Default enumeration cap for [`brute_force`].
pub const BRUTE_FORCE_CAP: u128 = 1_000_000;

/// `D ↦ D ⊓ e⁻¹(π(UP(e(D))))` for a fixed clause set, reusing one engine.
#[derive(Clone, Debug)]
pub struct Propagator {
    engine: Engine,
    vars: Vec<IntEncoding>,
}

impl Propagator {
    pub fn new(cnf: &CnfBuilder, vars: &[IntEncoding]) -> Self {
        Propagator {
            engine: Engine::new(cnf),
            vars: vars.to_vec(),
        }
    }

    pub fn from_artifact(art: &EncodingArtifact) -> Self {
        Self::new(&art.cnf, &art.vars)
    }

    /// Applies the propagator; a failure is the canonical empty box.
    pub fn apply(&mut self, d: &DomainBox) -> DomainBox {
        if d.is_failed() {
            return d.clone().canonical();
        }
        let assumptions: Vec<Lit> = self
            .vars
            .iter()
            .enumerate()
            .flat_map(|(i, e)| e.embed(d.get(i)))
            .collect();
        match self.engine.propagate(&assumptions) {
            Err(_) => DomainBox::new(vec![Vec::new(); d.len()]),
            Ok(pa) => {
                let decoded = DomainBox::new(self.vars.iter().map(|e| e.extract(&pa)).collect());
                d.meet(&decoded).canonical()
            }
        }
    }

    /// Whether the clauses plus `e(v)` are satisfiable for a complete
    /// assignment `v`.
    pub fn accepts(&mut self, values: &[i64]) -> bool {
        let assumptions: Vec<Lit> = self.vars.iter().zip(values).flat_map(|(e, &v)| e.fix(v)).collect();
        matches!(self.engine.solve(&assumptions), SolveOutcome::Sat(_))
    }
}

/// One-shot form of [`Propagator::apply`].
pub fn encoded_propagator(art: &EncodingArtifact, d: &DomainBox) -> DomainBox {
    Propagator::from_artifact(art).apply(d)
}

fn min_sum(li: &NormalizedLI, d: &DomainBox) -> i64 {
    li.terms
        .iter()
        .enumerate()
        .map(|(i, t)| t.coef * d.min(i).expect("non-empty"))
        .sum()
}

/// Whether `li` has a solution inside `d`; the lower bounds are the best
/// candidate because the constraint is monotone.
pub fn consistency_oracle(li: &NormalizedLI, d: &DomainBox) -> bool {
    !d.is_failed() && min_sum(li, d) <= li.bound
}

/// The domain-consistent propagator of `li`: removes every value that
/// exceeds the slack left by the other variables' minima.
pub fn dc_oracle(li: &NormalizedLI, d: &DomainBox) -> DomainBox {
    if !consistency_oracle(li, d) {
        return DomainBox::new(vec![Vec::new(); d.len()]);
    }
    let total = min_sum(li, d);
    let mut out = d.clone();
    for (i, t) in li.terms.iter().enumerate() {
        let rest = total - t.coef * d.min(i).expect("non-empty");
        let ub = (li.bound - rest).div_euclid(t.coef);
        out.retain(i, |&v| v <= ub);
    }
    out
}

/// Result of exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForce {
    pub count: u64,
    /// Projection of the solution set onto each variable.
    pub supports: DomainBox,
}

/// Visits every point of `d` in lexicographic order.
pub fn for_each_point(d: &DomainBox, mut f: impl FnMut(&[i64])) {
    if d.is_failed() {
        return;
    }
    let n = d.len();
    let mut idx = vec![0usize; n];
    let mut point: Vec<i64> = (0..n).map(|i| d.get(i)[0]).collect();
    loop {
        f(&point);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < d.get(k).len() {
                point[k] = d.get(k)[idx[k]];
                break;
            }
            idx[k] = 0;
            point[k] = d.get(k)[0];
        }
    }
}

/// Number of points in `d`.
pub fn box_size(d: &DomainBox) -> u128 {
    (0..d.len()).map(|i| d.get(i).len() as u128).product()
}

/// Enumerates all solutions of `li` inside `d`.
pub fn brute_force(li: &NormalizedLI, d: &DomainBox, cap: u128) -> Result<BruteForce, VerifyError> {
    let size = box_size(d);
    if size > cap {
        return Err(VerifyError::TooLarge { size, cap });
    }
    let mut count = 0;
    let mut sets: Vec<Vec<i64>> = vec![Vec::new(); d.len()];
    for_each_point(d, |p| {
        if li.holds(p) {
            count += 1;
            for (s, &v) in sets.iter_mut().zip(p) {
                s.push(v);
            }
        }
    });
    Ok(BruteForce {
        count,
        supports: DomainBox::new(sets),
    })
}

/// Renders a box as `{[0,1,2],[3],[]}`.
pub fn fmt_box(d: &DomainBox) -> String {
    let parts: Vec<String> = (0..d.len())
        .map(|i| {
            let vs: Vec<String> = d.get(i).iter().map(i64::to_string).collect();
            format!("[{}]", vs.join(","))
        })
        .collect();
    format!("{{{}}}", parts.join(","))
}

/// The first complete assignment of `d` on which the artifact disagrees
/// with the constraint, as `(values, constraint holds)`.
pub fn model_equivalence(art: &EncodingArtifact, li: &NormalizedLI) -> Option<(Vec<i64>, bool)> {
    let mut prop = Propagator::from_artifact(art);
    let mut bad = None;
    for_each_point(&DomainBox::full(&li.doms()), |p| {
        if bad.is_none() {
            let truth = li.holds(p);
            if prop.accepts(p) != truth {
                bad = Some((p.to_vec(), truth));
            }
        }
    });
    bad
}

/// Like [`model_equivalence`] for a whole model, through normalization.
pub fn model_equivalence_model(
    model: &Model,
    method: Method,
    opts: &EncodeOptions,
) -> Result<Option<(Vec<i64>, bool)>, EncodeError> {
    let enc = encode_model(model, method, opts)?;
    let mut prop = Propagator::new(&enc.cnf, &enc.vars);
    let d = DomainBox::new(model.vars.iter().map(|v| (v.lo..=v.hi).collect()).collect());
    let mut bad = None;
    for_each_point(&d, |p| {
        if bad.is_none() {
            let truth = model.is_feasible(p);
            if prop.accepts(p) != truth {
                bad = Some((p.to_vec(), truth));
            }
        }
    });
    Ok(bad)
}

/// Shape of randomly generated instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub instances: usize,
    pub n_max: usize,
    pub d_max: i64,
    pub a_max: i64,
    /// Boxes sampled per instance.
    pub boxes: usize,
    /// Lower-bound boxes are enumerated exhaustively up to this many.
    pub exhaustive_cap: u128,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            instances: 500,
            n_max: 5,
            d_max: 5,
            a_max: 7,
            boxes: 50,
            exhaustive_cap: 2_000,
        }
    }
}

/// `Σ a_i x_i ≤ a₀` with `a_i ∈ [1, a_max]`, `d_i ∈ [1, d_max]` and
/// `a₀ ∈ [0, Σ a_i d_i]`.
pub fn random_instance(rng: &mut impl Rng, p: &GenParams) -> NormalizedLI {
    let n = rng.random_range(1..=p.n_max);
    let coefs: Vec<i64> = (0..n).map(|_| rng.random_range(1..=p.a_max)).collect();
    let doms: Vec<i64> = (0..n).map(|_| rng.random_range(1..=p.d_max)).collect();
    let max: i64 = coefs.iter().zip(&doms).map(|(a, d)| a * d).sum();
    NormalizedLI::new(&coefs, &doms, rng.random_range(0..=max))
}

/// A box `[l_i, d_i]` with random lower bounds.
pub fn random_lower_box(rng: &mut impl Rng, doms: &[i64]) -> DomainBox {
    let lbs: Vec<i64> = doms.iter().map(|&d| rng.random_range(0..=d)).collect();
    DomainBox::lower_bounds(&lbs, doms)
}

/// A box of random non-empty subsets.
pub fn random_box(rng: &mut impl Rng, doms: &[i64]) -> DomainBox {
    DomainBox::new(
        doms.iter()
            .map(|&d| loop {
                let s: Vec<i64> = (0..=d).filter(|_| rng.random_bool(0.6)).collect();
                if !s.is_empty() {
                    break s;
                }
            })
            .collect(),
    )
}

/// Every lower-bound box of `doms`.
pub fn all_lower_boxes(doms: &[i64]) -> Vec<DomainBox> {
    let mut out = Vec::new();
    for_each_point(&DomainBox::full(doms), |lbs| out.push(DomainBox::lower_bounds(lbs, doms)));
    out
}

/// Properties checked by [`check_property`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    ModelEquivalence,
    Consistency,
    DomainConsistency,
    NonConsistencyWitness,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::ModelEquivalence,
        Property::Consistency,
        Property::DomainConsistency,
        Property::NonConsistencyWitness,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Property::ModelEquivalence => "model-equivalence",
            Property::Consistency => "consistency",
            Property::DomainConsistency => "domain-consistency",
            Property::NonConsistencyWitness => "non-consistency-witness",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Property {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| VerifyError::UnknownProperty(s.to_string()))
    }
}

/// A failed check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub input: String,
    pub expected: String,
    pub actual: String,
}

/// Outcome of one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckLine {
    pub instance: usize,
    pub constraint: String,
    pub checks: usize,
    pub failure: Option<Counterexample>,
}

/// Line-based report of a property run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropReport {
    pub method: Method,
    pub property: Property,
    pub seed: u64,
    pub lines: Vec<CheckLine>,
}

impl PropReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.failure.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| l.failure.is_some())
    }

    pub fn checks(&self) -> usize {
        self.lines.iter().map(|l| l.checks).sum()
    }

    /// The closing summary line.
    pub fn summary(&self) -> String {
        format!(
            "seed={} method={} property={} instances={} checks={} failures={} {}",
            self.seed,
            self.method,
            self.property,
            self.lines.len(),
            self.checks(),
            self.failures().count(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

impl fmt::Display for PropReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            write!(
                f,
                "seed={} method={} property={} instance={} constraint=\"{}\" checks={} ",
                self.seed, self.method, self.property, l.instance, l.constraint, l.checks
            )?;
            match &l.failure {
                None => writeln!(f, "PASS")?,
                Some(c) => writeln!(f, "FAIL input={} expected={} actual={}", c.input, c.expected, c.actual)?,
            }
        }
        writeln!(f, "{}", self.summary())
    }
}

/// The running example `3x₁ + 2x₂ + 5x₃ ≤ 15`, `x ∈ [0,4]×[0,2]×[0,3]`;
/// always the first instance of a run.
pub fn running_example() -> NormalizedLI {
    NormalizedLI::new(&[3, 2, 5], &[4, 2, 3], 15)
}

/// Documented partial assignments under which a weak encoding detects no
/// conflict although the constraint is unsatisfiable: `(constraint, box,
/// methods)`.
pub fn documented_witnesses() -> Vec<(NormalizedLI, DomainBox, &'static [Method])> {
    vec![
        (
            NormalizedLI::new(&[1; 5], &[1; 5], 2),
            DomainBox::lower_bounds(&[1, 0, 1, 1, 0], &[1; 5]),
            &[Method::Adder],
        ),
        (
            NormalizedLI::new(&[4, 5, 6], &[2, 2, 2], 14),
            DomainBox::lower_bounds(&[1, 1, 1], &[2, 2, 2]),
            &[Method::Adder, Method::Bdd, Method::BddDec],
        ),
    ]
}

fn check_boxes(
    prop: &mut Propagator,
    li: &NormalizedLI,
    boxes: impl IntoIterator<Item = DomainBox>,
    dc: bool,
) -> (usize, Option<Counterexample>) {
    let mut checks = 0;
    for d in boxes {
        checks += 1;
        let actual = prop.apply(&d);
        let failure = if dc {
            let expected = dc_oracle(li, &d).canonical();
            (actual != expected).then(|| (fmt_box(&expected), fmt_box(&actual)))
        } else {
            let sat = consistency_oracle(li, &d);
            (sat == actual.is_failed()).then(|| {
                let want = if sat { "no-conflict" } else { "conflict" };
                (want.to_string(), fmt_box(&actual))
            })
        };
        if let Some((expected, actual)) = failure {
            return (
                checks,
                Some(Counterexample {
                    input: fmt_box(&d),
                    expected,
                    actual,
                }),
            );
        }
    }
    (checks, None)
}

/// Runs `property` for `method` on `params.instances` seeded instances,
/// starting with the running example.
pub fn check_property(method: Method, property: Property, params: &GenParams, seed: u64, opts: &EncodeOptions) -> PropReport {
    let mut report = PropReport {
        method,
        property,
        seed,
        lines: Vec::new(),
    };
    if property == Property::NonConsistencyWitness {
        for (k, (li, d, methods)) in documented_witnesses().into_iter().enumerate() {
            if !methods.contains(&method) {
                continue;
            }
            let art = encode_constraint(&li, method, opts);
            let actual = encoded_propagator(&art, &d);
            let failure = actual.is_failed().then(|| Counterexample {
                input: fmt_box(&d),
                expected: "no-conflict".into(),
                actual: "conflict".into(),
            });
            report.lines.push(CheckLine {
                instance: k,
                constraint: li.to_string(),
                checks: 1,
                failure,
            });
        }
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..params.instances {
        let li = if k == 0 { running_example() } else { random_instance(&mut rng, params) };
        let doms = li.doms();
        let art = encode_constraint(&li, method, opts);
        let (checks, failure) = match property {
            Property::ModelEquivalence => {
                let n = box_size(&DomainBox::full(&doms)) as usize;
                let failure = model_equivalence(&art, &li).map(|(p, truth)| Counterexample {
                    input: format!("{p:?}"),
                    expected: if truth { "sat" } else { "unsat" }.into(),
                    actual: if truth { "unsat" } else { "sat" }.into(),
                });
                (n, failure)
            }
            Property::Consistency | Property::DomainConsistency => {
                let mut prop = Propagator::from_artifact(&art);
                let dc = property == Property::DomainConsistency;
                let mut boxes: Vec<DomainBox> = if box_size(&DomainBox::full(&doms)) <= params.exhaustive_cap {
                    all_lower_boxes(&doms)
                } else {
                    (0..params.boxes).map(|_| random_lower_box(&mut rng, &doms)).collect()
                };
                if dc {
                    boxes.extend((0..params.boxes).map(|_| random_box(&mut rng, &doms)));
                }
                check_boxes(&mut prop, &li, boxes, dc)
            }
            Property::NonConsistencyWitness => unreachable!(),
        };
        report.lines.push(CheckLine {
            instance: k,
            constraint: li.to_string(),
            checks,
            failure,
        });
    }
    report
}
