//! Complete search, an external-solver bridge over DIMACS, and
//! branch-and-bound optimization over incrementally tightened encodings.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read as _, Seek, Write as _};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{write_dimacs, CnfBuilder, Engine, Lit, SolveOutcome};
use crate::encode::{encode_model, EncodeError, EncodeOptions, Method, ModelEncoding};
use crate::mdd::{Mdd, MddEncoder};
use crate::model::{normalize, LinearConstraint, Model, ModelError, NormalizedLI, RelOp, Sense};
use crate::netblocks::card_network;
use crate::sn::{best_base, opt_cost, sn_opt_bound, sn_opt_encode, SnOptEncoding};

/// Status plus a total model when satisfiable.
pub type SolveResult = SolveOutcome;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited abnormally ({0})")]
    Crashed(String),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("solver output line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("solver model violates clause {0}")]
    BadModel(usize),
    #[error("unknown solver `{0}`; expected `builtin` or `cmd:<path>`")]
    UnknownSolver(String),
}

/// DPLL with unit propagation, branching on the lowest open variable.
pub fn dpll_solve(db: &CnfBuilder, assumptions: &[Lit]) -> SolveResult {
    Engine::new(db).solve(assumptions)
}

/// Where satisfiability questions go.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solver {
    Builtin,
    /// Program plus leading arguments; the DIMACS path is appended.
    Command { argv: Vec<String>, timeout: Duration },
}

impl Solver {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    pub fn solve(&self, db: &CnfBuilder) -> Result<SolveResult, SolveError> {
        match self {
            Solver::Builtin => Ok(dpll_solve(db, &[])),
            Solver::Command { argv, timeout } => external_solve(db, argv, *timeout),
        }
    }
}

impl FromStr for Solver {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            return Ok(Solver::Builtin);
        }
        match s.strip_prefix("cmd:") {
            Some(rest) if !rest.trim().is_empty() => Ok(Solver::Command {
                argv: rest.split_whitespace().map(String::from).collect(),
                timeout: Solver::DEFAULT_TIMEOUT,
            }),
            _ => Err(SolveError::UnknownSolver(s.to_string())),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Solver::Builtin => f.write_str("builtin"),
            Solver::Command { argv, .. } => write!(f, "cmd:{}", argv.join(" ")),
        }
    }
}

/// Parses `s`/`v` solver output. Unlisted variables default to false.
pub fn parse_solver_output(text: &str, num_vars: usize) -> Result<SolveResult, SolveError> {
    let mut status = None;
    let mut model = vec![false; num_vars];
    let mut terminated = false;
    for (i, line) in text.lines().enumerate() {
        let err = |msg: String| SolveError::Parse { line: i + 1, msg };
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(match s.trim() {
                "SATISFIABLE" => true,
                "UNSATISFIABLE" => false,
                other => return Err(err(format!("unknown status `{other}`"))),
            });
        } else if let Some(v) = line.strip_prefix("v") {
            for tok in v.split_whitespace() {
                let x: i64 = tok.parse().map_err(|_| err(format!("bad literal `{tok}`")))?;
                if x == 0 {
                    terminated = true;
                    continue;
                }
                let idx = x.unsigned_abs() as usize;
                if idx > num_vars {
                    return Err(err(format!("variable {idx} out of range")));
                }
                model[idx - 1] = x > 0;
            }
        }
    }
    match status {
        Some(true) if !terminated => Err(SolveError::Parse {
            line: text.lines().count(),
            msg: "model not terminated by 0".into(),
        }),
        Some(true) => Ok(SolveOutcome::Sat(model)),
        Some(false) => Ok(SolveOutcome::Unsat),
        None => Err(SolveError::Crashed("no status line".into())),
    }
}

/// Writes `db` to a temporary DIMACS file, runs `argv… <file>` and parses
/// its answer. Models are checked against the clauses.
pub fn external_solve(db: &CnfBuilder, argv: &[String], timeout: Duration) -> Result<SolveResult, SolveError> {
    let (prog, args) = argv.split_first().ok_or_else(|| SolveError::UnknownSolver(String::new()))?;
    let mut input = tempfile::Builder::new().suffix(".cnf").tempfile()?;
    {
        let mut w = BufWriter::new(input.as_file_mut());
        write_dimacs(db, &mut w)?;
        w.flush()?;
    }
    let mut out: File = tempfile::tempfile()?;
    let mut child = Command::new(prog)
        .args(args)
        .arg(input.path())
        .stdin(Stdio::null())
        .stdout(out.try_clone()?)
        .stderr(Stdio::null())
        .spawn()?;
    let start = Instant::now();
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break st;
        }
        if start.elapsed() > timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(SolveError::Timeout(timeout));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    // SAT competition convention: 10 = SAT, 20 = UNSAT.
    if !matches!(status.code(), Some(0 | 10 | 20)) {
        return Err(SolveError::Crashed(status.to_string()));
    }
    let mut text = String::new();
    out.rewind()?;
    out.read_to_string(&mut text)?;
    let res = parse_solver_output(&text, db.num_vars())?;
    if let SolveOutcome::Sat(m) = &res {
        let truth = |l: Lit| m[l.var().index()] != l.is_negated();
        if let Some(i) = db.clauses().iter().position(|c| !c.iter().any(|&l| truth(l))) {
            return Err(SolveError::BadModel(i));
        }
    }
    Ok(res)
}

/// Encodings with incremental bound tightening.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMethod {
    Mdd,
    SnOpt,
    CardNet,
}

impl OptMethod {
    pub fn method(self) -> Method {
        match self {
            OptMethod::Mdd => Method::Mdd,
            OptMethod::SnOpt => Method::SnOpt,
            OptMethod::CardNet => Method::CardNet,
        }
    }

    pub fn from_method(m: Method) -> Option<Self> {
        match m {
            Method::Mdd => Some(OptMethod::Mdd),
            Method::SnOpt => Some(OptMethod::SnOpt),
            Method::CardNet => Some(OptMethod::CardNet),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum OptError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("model has no objective")]
    NoObjective,
    #[error("model is infeasible")]
    Infeasible,
    #[error("`{0}` has no incremental bound; use mdd, sn-opt or card-net")]
    NotIncremental(Method),
    #[error("solver returned an assignment violating the model: {0:?}")]
    Unsound(Vec<i64>),
}

/// One solved step of a descent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    /// Objective bound in force (`None` for the unconstrained first solve).
    pub bound: Option<i64>,
    /// Objective value found, or `None` when the step was unsatisfiable.
    pub value: Option<i64>,
    pub vars: usize,
    pub clauses: usize,
}

/// Trace and result of [`branch_and_bound`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptRun {
    pub method: OptMethod,
    pub steps: Vec<Step>,
    pub incumbent: Vec<i64>,
    pub objective: i64,
    pub optimal: bool,
    /// Normalized bound of the first tightening (`a₀` of the objective row).
    pub first_bound: i64,
    /// Objective terms after normalization.
    pub objective_terms: usize,
    /// Variables and clauses added by all objective tightenings.
    pub fresh_vars: usize,
    pub fresh_clauses: usize,
    pub base: Option<i64>,
}

/// Incremental objective state.
enum Tightener {
    Mdd { mdd: Mdd, enc: MddEncoder },
    SnOpt(Option<SnOptEncoding>),
    CardNet(Option<Vec<Lit>>),
}

/// Minimizes (or maximizes) the model objective: solve, then require the
/// objective to beat the incumbent, reusing the objective encoding, until
/// unsatisfiable. Each step is a fresh solver call.
pub fn branch_and_bound(model: &Model, method: OptMethod, solver: &Solver, opts: &EncodeOptions) -> Result<OptRun, OptError> {
    let obj = model.objective.as_ref().ok_or(OptError::NoObjective)?;
    let sign = if obj.sense == Sense::Max { -1 } else { 1 };
    let terms: Vec<(i64, usize)> = obj.terms.iter().map(|&(c, v)| (sign * c, v)).collect();
    let mut rows = normalize(&LinearConstraint::new(terms, RelOp::Le, 0), &model.vars)?;
    let row = rows.pop().expect("one row for <=");
    // f(x) = L(x') - offset, where L is the normalized left-hand side
    let offset = row.bound;
    let mut enc = encode_model(model, method.method(), opts)?;
    let sels = enc.order_views(&row);
    let coefs = row.coefs();
    let doms = row.doms();
    let mut tight = match method {
        OptMethod::Mdd => Tightener::Mdd {
            mdd: Mdd::new(&coefs, &doms),
            enc: MddEncoder::new(),
        },
        OptMethod::SnOpt => Tightener::SnOpt(None),
        OptMethod::CardNet => Tightener::CardNet(None),
    };
    let mut run = OptRun {
        method,
        steps: Vec::new(),
        incumbent: Vec::new(),
        objective: 0,
        optimal: false,
        first_bound: 0,
        objective_terms: row.len(),
        fresh_vars: 0,
        fresh_clauses: 0,
        base: None,
    };
    let lhs = |enc: &ModelEncoding, m: &[bool], row: &NormalizedLI| -> i64 {
        let xs = enc.decode(m);
        row.terms.iter().map(|t| t.coef * t.subst.apply(xs[t.var])).sum()
    };
    let mut bound: Option<i64> = None;
    loop {
        let res = solver.solve(&enc.cnf)?;
        let SolveOutcome::Sat(m) = res else {
            run.steps.push(Step {
                bound: bound.map(|b| sign * (b - offset)),
                value: None,
                vars: enc.cnf.num_vars(),
                clauses: enc.cnf.num_clauses(),
            });
            if run.steps.len() == 1 {
                return Err(OptError::Infeasible);
            }
            run.optimal = true;
            return Ok(run);
        };
        let xs = enc.decode(&m);
        if !model.is_feasible(&xs) {
            return Err(OptError::Unsound(xs));
        }
        let l = lhs(&enc, &m, &row);
        run.steps.push(Step {
            bound: bound.map(|b| sign * (b - offset)),
            value: Some(sign * (l - offset)),
            vars: enc.cnf.num_vars(),
            clauses: enc.cnf.num_clauses(),
        });
        run.incumbent = xs;
        run.objective = sign * (l - offset);
        let next = l - 1;
        if bound.is_none() {
            run.first_bound = next;
        }
        bound = Some(next);
        let (v0, c0) = (enc.cnf.num_vars(), enc.cnf.num_clauses());
        let db = &mut enc.cnf;
        if next < 0 {
            db.add_clause([]);
        } else {
            match &mut tight {
                Tightener::Mdd { mdd, enc: menc } => {
                    let root = mdd.build(next);
                    menc.encode(db, mdd, root, &sels);
                }
                Tightener::SnOpt(state) => {
                    let e = state.get_or_insert_with(|| {
                        let b = opts
                            .base
                            .unwrap_or_else(|| best_base(|b| opt_cost(&coefs, &doms, next, b, opts.sn)));
                        run.base = Some(b);
                        sn_opt_encode(db, &coefs, &sels, b, opts.sn)
                    });
                    sn_opt_bound(db, e, next);
                }
                Tightener::CardNet(state) => {
                    // outputs y_1..y_K with y_j ⇔ L ≥ j, K = current value
                    let out = state.get_or_insert_with(|| {
                        let inputs: Vec<Lit> = coefs
                            .iter()
                            .zip(&sels)
                            .flat_map(|(&a, s)| s.iter().flat_map(move |&b| std::iter::repeat_n(b, a as usize)))
                            .collect();
                        card_network(db, &inputs, l as usize)
                    });
                    db.add_clause([!out[next as usize]]);
                }
            }
        }
        run.fresh_vars += enc.cnf.num_vars() - v0;
        run.fresh_clauses += enc.cnf.num_clauses() - c0;
    }
}

/// Fresh objective-node variables of an MDD descent, for the size bound.
pub fn mdd_descent_fresh_vars(row: &NormalizedLI, bounds: &[i64]) -> usize {
    let mut db = CnfBuilder::new();
    let sels: Vec<Vec<Lit>> = row
        .doms()
        .iter()
        .map(|&d| (0..d).map(|_| db.new_lit("order", "")).collect())
        .collect();
    let mut mdd = Mdd::new(&row.coefs(), &row.doms());
    let mut enc = MddEncoder::new();
    for &b in bounds {
        let root = mdd.build(b);
        enc.encode(&mut db, &mdd, root, &sels);
    }
    enc.fresh_vars()
}
