//! `lincnf`: encode linear integer models to CNF, check encoder properties,
//! optimize, and solve DIMACS files.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lincnf::cnf::{parse_dimacs, write_dimacs, write_roles, SolveOutcome};
use lincnf::encode::{encode_model, EncodeError, EncodeOptions, Method};
use lincnf::model::Model;
use lincnf::solve::{branch_and_bound, dpll_solve, OptError, OptMethod, Solver};
use lincnf::verify::{check_property, GenParams, Property};

const EXIT_UNSAT: u8 = 10;
const EXIT_FAIL: u8 = 20;
const EXIT_USAGE: u8 = 2;
const EXIT_FORMAT: u8 = 3;

#[derive(Parser)]
#[command(name = "lincnf", version, about = "CNF encodings of linear integer constraints")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Pre {
    /// Merge equal-coefficient terms through a cardinality network first.
    Group,
}

#[derive(clap::Args)]
struct EncodeFlags {
    /// Encoding method.
    #[arg(long, short, default_value = "mdd", value_parser = parse_method)]
    method: Method,
    /// Preprocessing step.
    #[arg(long)]
    pre: Option<Pre>,
    /// Digit base for the sorting-network methods: `auto` or 2..=10.
    #[arg(long, default_value = "auto", value_parser = parse_base)]
    base: Base,
}

#[derive(Clone, Copy, Debug)]
struct Base(Option<i64>);

impl EncodeFlags {
    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            base: self.base.0,
            group: self.pre == Some(Pre::Group),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode a model file to DIMACS; prints a STATS line on stderr.
    Encode {
        model: PathBuf,
        #[command(flatten)]
        flags: EncodeFlags,
        /// DIMACS output path (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Variable-role map output path.
        #[arg(long)]
        roles: Option<PathBuf>,
    },
    /// Check an encoder property on seeded random constraints.
    Check {
        #[arg(long, value_parser = parse_property)]
        property: Property,
        #[command(flatten)]
        flags: EncodeFlags,
        /// Number of random constraints.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Boxes sampled per constraint.
        #[arg(long, default_value_t = 50)]
        boxes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Minimize or maximize the model objective by branch and bound.
    Optimize {
        model: PathBuf,
        #[command(flatten)]
        flags: EncodeFlags,
        /// `builtin` or `cmd:<program> [args]`.
        #[arg(long, default_value = "builtin", value_parser = parse_solver)]
        solver: Solver,
    },
    /// Solve a DIMACS file with the built-in DPLL; answers in `s`/`v` lines.
    Solve { cnf: PathBuf },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: lincnf::encode::UnknownMethod| {
        let ids: Vec<&str> = Method::ALL.iter().map(|m| m.id()).collect();
        format!("{e} (expected one of {})", ids.join(", "))
    })
}

fn parse_base(s: &str) -> Result<Base, String> {
    if s == "auto" {
        return Ok(Base(None));
    }
    match s.parse::<i64>() {
        Ok(b) if (2..=10).contains(&b) => Ok(Base(Some(b))),
        _ => Err(format!("expected `auto` or a base in 2..=10, got `{s}`")),
    }
}

fn parse_property(s: &str) -> Result<Property, String> {
    s.parse().map_err(|e: lincnf::verify::VerifyError| e.to_string())
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: lincnf::solve::SolveError| e.to_string())
}

/// An error with its exit code.
struct Failure(u8, String);

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(1, e.to_string())
    }
}

impl From<EncodeError> for Failure {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::Model(m) => Failure(EXIT_FORMAT, m.to_string()),
            other => Failure(EXIT_USAGE, other.to_string()),
        }
    }
}

fn read_model(path: &Path) -> Result<Model, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    Model::parse(&text).map_err(|e| Failure(EXIT_FORMAT, format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    let f = fs::File::create(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Encode {
            model,
            flags,
            out,
            roles,
        } => {
            let m = read_model(&model)?;
            let enc = encode_model(&m, flags.method, &flags.options())?;
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_dimacs(&enc.cnf, &mut w)?;
                    w.flush()?;
                }
                None => {
                    let stdout = io::stdout();
                    let mut w = BufWriter::new(stdout.lock());
                    write_dimacs(&enc.cnf, &mut w)?;
                    w.flush()?;
                }
            }
            if let Some(p) = roles {
                let mut w = create(&p)?;
                write_roles(&enc.cnf, &mut w)?;
                w.flush()?;
            }
            eprintln!(
                "STATS method={} base={} pre={} vars={} clauses={}",
                flags.method,
                enc.reported_base().map_or("-".to_string(), |b| b.to_string()),
                if flags.pre.is_some() { "on" } else { "off" },
                enc.cnf.num_vars(),
                enc.cnf.num_clauses()
            );
            Ok(0)
        }
        Cmd::Check {
            property,
            flags,
            samples,
            boxes,
            seed,
        } => {
            let opts = flags.options();
            if opts.group && flags.method.uses_log() {
                return Err(EncodeError::GroupingNeedsOrder(flags.method).into());
            }
            let params = GenParams {
                instances: samples,
                boxes,
                ..GenParams::default()
            };
            let report = check_property(flags.method, property, &params, seed, &opts);
            print!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_FAIL })
        }
        Cmd::Optimize { model, flags, solver } => {
            let m = read_model(&model)?;
            let method = OptMethod::from_method(flags.method).ok_or_else(|| {
                Failure(EXIT_USAGE, OptError::NotIncremental(flags.method).to_string())
            })?;
            match branch_and_bound(&m, method, &solver, &flags.options()) {
                Ok(run) => {
                    for s in &run.steps {
                        let bound = s.bound.map_or("-".to_string(), |b| b.to_string());
                        match s.value {
                            Some(v) => println!("step bound={bound} value={v} vars={} clauses={}", s.vars, s.clauses),
                            None => println!("step bound={bound} unsat vars={} clauses={}", s.vars, s.clauses),
                        }
                    }
                    let assignment: Vec<String> =
                        m.vars.iter().zip(&run.incumbent).map(|(v, x)| format!("{}={x}", v.name)).collect();
                    println!("solution {}", assignment.join(" "));
                    println!(
                        "OPTIMUM {} method={} fresh_vars={} fresh_clauses={} first_bound={} terms={}",
                        run.objective,
                        flags.method,
                        run.fresh_vars,
                        run.fresh_clauses,
                        run.first_bound,
                        run.objective_terms
                    );
                    Ok(0)
                }
                Err(OptError::Infeasible) => {
                    println!("INFEASIBLE");
                    Ok(EXIT_UNSAT)
                }
                Err(OptError::Encode(e)) => Err(e.into()),
                Err(OptError::Model(e)) => Err(Failure(EXIT_FORMAT, e.to_string())),
                Err(OptError::NoObjective) => Err(Failure(EXIT_USAGE, OptError::NoObjective.to_string())),
                Err(e) => Err(Failure(1, e.to_string())),
            }
        }
        Cmd::Solve { cnf } => {
            let text = fs::read_to_string(&cnf).map_err(|e| Failure(1, format!("{}: {e}", cnf.display())))?;
            let db = parse_dimacs(&text).map_err(|e| Failure(EXIT_FORMAT, format!("{}: {e}", cnf.display())))?;
            match dpll_solve(&db, &[]) {
                SolveOutcome::Sat(model) => {
                    println!("s SATISFIABLE");
                    let lits: Vec<String> = model
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| if b { format!("{}", i + 1) } else { format!("-{}", i + 1) })
                        .collect();
                    println!("v {} 0", lits.join(" "));
                    Ok(0)
                }
                SolveOutcome::Unsat => {
                    println!("s UNSATISFIABLE");
                    Ok(EXIT_UNSAT)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
