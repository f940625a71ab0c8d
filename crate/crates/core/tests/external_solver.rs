//! The DIMACS bridge against scripted stand-in solvers.
#![cfg(unix)]

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::PathBuf;
use std::time::Duration;

use lincnf::cnf::{CnfBuilder, SolveOutcome};
use lincnf::solve::{dpll_solve, external_solve, SolveError, Solver};
use tempfile::TempDir;

/// A shell script solver; `$1` is the DIMACS file.
fn script(dir: &TempDir, name: &str, body: &str) -> Vec<String> {
    let path: PathBuf = dir.path().join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    vec![path.display().to_string()]
}

/// `(y1) ∧ (¬y1 ∨ ¬y2)`
fn formula() -> CnfBuilder {
    let mut db = CnfBuilder::new();
    let a = db.new_lit("y", "1");
    let b = db.new_lit("y", "2");
    db.add_clause([a]);
    db.add_clause([!a, !b]);
    db
}

const T: Duration = Duration::from_secs(10);

#[test]
fn satisfiable_answer_is_parsed_and_checked() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "sat.sh", "echo 'c scripted'\necho 's SATISFIABLE'\necho 'v 1 -2 0'\nexit 10");
    let db = formula();
    let got = external_solve(&db, &argv, T).unwrap();
    assert_eq!(got, SolveOutcome::Sat(vec![true, false]));
    assert_eq!(got, dpll_solve(&db, &[]));
}

#[test]
fn unsatisfiable_answer() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "unsat.sh", "echo 's UNSATISFIABLE'\nexit 20");
    assert_eq!(external_solve(&formula(), &argv, T).unwrap(), SolveOutcome::Unsat);
}

#[test]
fn solver_receives_the_formula() {
    let dir = TempDir::new().unwrap();
    let copy = dir.path().join("seen.cnf");
    let argv = script(
        &dir,
        "copy.sh",
        &format!("cp \"$1\" '{}'\necho 's UNSATISFIABLE'", copy.display()),
    );
    external_solve(&formula(), &argv, T).unwrap();
    assert_eq!(fs::read_to_string(copy).unwrap(), "p cnf 2 2\n1 0\n-1 -2 0\n");
}

#[test]
fn crash_is_a_transport_error() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "crash.sh", "exit 3");
    assert!(matches!(external_solve(&formula(), &argv, T), Err(SolveError::Crashed(_))));
    let silent = script(&dir, "silent.sh", "exit 0");
    assert!(matches!(external_solve(&formula(), &silent, T), Err(SolveError::Crashed(_))));
}

#[test]
fn missing_program_is_an_io_error() {
    let argv = vec!["/nonexistent/solver".to_string()];
    assert!(matches!(external_solve(&formula(), &argv, T), Err(SolveError::Io(_))));
}

#[test]
fn timeout_kills_the_solver() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "slow.sh", "sleep 30");
    let t = std::time::Instant::now();
    let res = external_solve(&formula(), &argv, Duration::from_millis(200));
    assert!(matches!(res, Err(SolveError::Timeout(_))), "{res:?}");
    assert!(t.elapsed() < Duration::from_secs(10));
}

#[test]
fn malformed_value_line() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "bad.sh", "echo 's SATISFIABLE'\necho 'v 1 two 0'");
    assert!(matches!(
        external_solve(&formula(), &argv, T),
        Err(SolveError::Parse { line: 2, .. })
    ));
}

#[test]
fn wrong_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "liar.sh", "echo 's SATISFIABLE'\necho 'v 1 2 0'");
    assert!(matches!(external_solve(&formula(), &argv, T), Err(SolveError::BadModel(1))));
}

#[test]
fn solver_spec_routes_to_the_script() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "sat.sh", "echo 's SATISFIABLE'\necho 'v 1 -2 0'");
    let s: Solver = format!("cmd:{}", argv[0]).parse().unwrap();
    assert_eq!(s.solve(&formula()).unwrap(), SolveOutcome::Sat(vec![true, false]));
}
