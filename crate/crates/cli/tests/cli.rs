use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_lincnf");

const RUNNING: &str = "\
# 3 x1 + 2 x2 + 5 x3 <= 15
var x1 0 4
var x2 0 2
var x3 0 3
lin 3 x1 + 2 x2 + 5 x3 <= 15
";

fn lincnf(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn lincnf")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stats(out: &Output) -> Vec<(String, String)> {
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().find(|l| l.starts_with("STATS ")).expect("stats line");
    line.split_whitespace()
        .skip(1)
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn stat(out: &Output, key: &str) -> String {
    stats(out).into_iter().find(|(k, _)| k == key).unwrap().1
}

#[test]
fn encode_running_example_reports_reduced_diagram() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "run.lin", RUNNING);
    let roles = dir.path().join("roles.txt");
    let out = lincnf(&["encode", s(&model), "--method", "mdd", "--roles", s(&roles)]);
    assert!(out.status.success(), "{out:?}");
    // 9 order bits for the three domains; the rest are diagram nodes.
    assert_eq!(stat(&out, "vars"), "19");
    assert_eq!(stat(&out, "method"), "mdd");
    assert_eq!(stat(&out, "base"), "-");
    assert_eq!(stat(&out, "pre"), "off");
    let roles = fs::read_to_string(roles).unwrap();
    assert_eq!(roles.lines().filter(|l| l.starts_with("mdd-node")).count(), 10);
    let dimacs = String::from_utf8(out.stdout).unwrap();
    assert!(dimacs.starts_with(&format!("p cnf 19 {}\n", stat_clauses(&dimacs))));
}

fn stat_clauses(dimacs: &str) -> usize {
    dimacs.lines().skip(1).filter(|l| !l.starts_with('c')).count()
}

#[test]
fn encode_writes_to_file() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "run.lin", RUNNING);
    let cnf = dir.path().join("out.cnf");
    let out = lincnf(&["encode", s(&model), "--method", "sn-tare", "--base", "3", "--out", s(&cnf)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(stat(&out, "base"), "3");
    let text = fs::read_to_string(cnf).unwrap();
    assert!(text.starts_with(&format!("p cnf {} {}", stat(&out, "vars"), stat(&out, "clauses"))));
}

#[test]
fn empty_model_is_header_only() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "empty.lin", "");
    let out = lincnf(&["encode", s(&model)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "p cnf 0 0\n");
}

#[test]
fn encoding_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "run.lin", RUNNING);
    for m in ["adder", "totalizer", "card-net", "support", "mdd", "sn-tare", "sn-opt", "bdd", "bdd-dec"] {
        let a = lincnf(&["encode", s(&model), "--method", m]);
        let b = lincnf(&["encode", s(&model), "--method", m]);
        assert!(a.status.success(), "{m}");
        assert_eq!(a.stdout, b.stdout, "{m}");
        assert_eq!(a.stderr, b.stderr, "{m}");
    }
}

#[test]
fn grouping_flag_is_reported() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "g.lin", "var a 0 1\nvar b 0 1\nvar c 0 1\nlin 2 a + 2 b + 2 c <= 4\n");
    let out = lincnf(&["encode", s(&model), "--method", "mdd", "--pre", "group"]);
    assert!(out.status.success());
    assert_eq!(stat(&out, "pre"), "on");
    // grouping is defined over order-encoded inputs only
    let out = lincnf(&["encode", s(&model), "--method", "adder", "--pre", "group"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_mdd_domain_consistency_passes() {
    let out = lincnf(&["check", "--property", "domain-consistency", "--method", "mdd", "--samples", "500", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().last().unwrap().ends_with("PASS"));
}

#[test]
fn check_sn_tare_is_consistent_but_not_domain_consistent() {
    let out = lincnf(&["check", "--property", "domain-consistency", "--method", "sn-tare", "--samples", "100", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(20));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
    let out = lincnf(&["check", "--property", "consistency", "--method", "sn-tare", "--samples", "500", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_report_is_deterministic() {
    let args = ["check", "--property", "consistency", "--method", "bdd-dec", "--samples", "40", "--seed", "3"];
    assert_eq!(lincnf(&args).stdout, lincnf(&args).stdout);
}

const KNAPSACK: &str = "\
var x1 0 3
var x2 0 2
var x3 0 4
lin 3 x1 + 4 x2 + 2 x3 <= 10
max 5 x1 + 6 x2 + 3 x3
";

fn brute_knapsack() -> i64 {
    let mut best = i64::MIN;
    for x1 in 0..=3 {
        for x2 in 0..=2 {
            for x3 in 0..=4 {
                if 3 * x1 + 4 * x2 + 2 * x3 <= 10 {
                    best = best.max(5 * x1 + 6 * x2 + 3 * x3);
                }
            }
        }
    }
    best
}

fn optimum(out: &Output) -> (i64, usize) {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.starts_with("OPTIMUM ")).expect("optimum line");
    let mut it = line.split_whitespace().skip(1);
    let value = it.next().unwrap().parse().unwrap();
    let fresh = it
        .find_map(|kv| kv.strip_prefix("fresh_vars="))
        .unwrap()
        .parse()
        .unwrap();
    (value, fresh)
}

#[test]
fn optimize_matches_brute_force() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "k.lin", KNAPSACK);
    for m in ["mdd", "sn-opt", "card-net"] {
        let out = lincnf(&["optimize", s(&model), "--method", m]);
        assert_eq!(out.status.code(), Some(0), "{m}");
        assert_eq!(optimum(&out).0, brute_knapsack(), "{m}");
    }
}

#[test]
fn optimize_mdd_fresh_vars_within_descent_bound() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "k.lin", KNAPSACK);
    let out = lincnf(&["optimize", s(&model), "--method", "mdd"]);
    let (_, fresh) = optimum(&out);
    // maximizing Σ c·x is minimizing Σ c·(ub - x); its first bound is Σ c·ub.
    let a0 = 5 * 3 + 6 * 2 + 3 * 4;
    assert!(fresh <= 3 * a0, "{fresh}");
}

#[test]
fn optimize_infeasible_exits_10() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "inf.lin", "var x 0 2\nlin 1 x >= 5\nmin 1 x\n");
    let out = lincnf(&["optimize", s(&model)]);
    assert_eq!(out.status.code(), Some(10));
    assert!(String::from_utf8(out.stdout).unwrap().contains("INFEASIBLE"));
}

#[test]
fn optimize_rejects_non_incremental_method() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "k.lin", KNAPSACK);
    let out = lincnf(&["optimize", s(&model), "--method", "sn-tare"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sn-opt"));
}

#[test]
fn optimize_through_external_solver() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "k.lin", KNAPSACK);
    let solver = format!("cmd:{BIN} solve");
    let out = lincnf(&["optimize", s(&model), "--method", "mdd", "--solver", &solver]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(optimum(&out).0, brute_knapsack());
}

#[test]
fn solve_reports_sat_and_unsat() {
    let dir = TempDir::new().unwrap();
    let sat = write(&dir, "sat.cnf", "p cnf 2 2\n1 0\n-1 -2 0\n");
    let out = lincnf(&["solve", s(&sat)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "s SATISFIABLE\nv 1 -2 0\n");
    let unsat = write(&dir, "unsat.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let out = lincnf(&["solve", s(&unsat)]);
    assert_eq!(out.status.code(), Some(10));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "s UNSATISFIABLE\n");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lincnf(&[]).status.code(), Some(2));
    assert_eq!(lincnf(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lincnf(&["check", "--property", "nope"]).status.code(), Some(2));
    assert_eq!(lincnf(&["check", "--property", "consistency", "--method", "nope"]).status.code(), Some(2));
    assert_eq!(lincnf(&["encode", "x.lin", "--base", "1"]).status.code(), Some(2));
}

#[test]
fn format_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "bad.lin", "var x 0 2\nlin 1 y <= 1\n");
    let out = lincnf(&["encode", s(&model)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let cnf = write(&dir, "bad.cnf", "p cnf 1 1\n1 x 0\n");
    assert_eq!(lincnf(&["solve", s(&cnf)]).status.code(), Some(3));
}
