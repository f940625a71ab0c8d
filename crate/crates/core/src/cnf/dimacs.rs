use std::io::{self, Write};

use super::{CnfBuilder, CnfError, Lit};

/// Writes the clause store in DIMACS CNF format.
pub fn write_dimacs<W: Write>(db: &CnfBuilder, mut out: W) -> io::Result<()> {
    writeln!(out, "p cnf {} {}", db.num_vars(), db.num_clauses())?;
    for clause in db.clauses() {
        for l in clause {
            write!(out, "{} ", l.to_dimacs())?;
        }
        writeln!(out, "0")?;
    }
    Ok(())
}

/// Writes one `ROLE<TAB>DETAILS<TAB>VARID` line per variable.
pub fn write_roles<W: Write>(db: &CnfBuilder, mut out: W) -> io::Result<()> {
    for (v, role) in db.roles() {
        writeln!(out, "{}\t{}\t{}", role.kind, role.detail, v.id())?;
    }
    Ok(())
}

fn format_err(line: usize, msg: impl Into<String>) -> CnfError {
    CnfError::Format {
        line,
        msg: msg.into(),
    }
}

/// Parses DIMACS CNF text. Variables are registered with the role `input`.
///
/// Clauses may span lines; comment lines start with `c`.
pub fn parse_dimacs(text: &str) -> Result<CnfBuilder, CnfError> {
    let mut db = CnfBuilder::new();
    let mut header: Option<(usize, usize)> = None;
    let mut current: Vec<Lit> = Vec::new();
    let mut seen = 0usize;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(format_err(line_no, "duplicate problem line"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(format_err(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let nv: usize = parts[2]
                .parse()
                .map_err(|_| format_err(line_no, "bad variable count"))?;
            let nc: usize = parts[3]
                .parse()
                .map_err(|_| format_err(line_no, "bad clause count"))?;
            for i in 0..nv {
                db.new_var("input", format!("v{}", i + 1));
            }
            header = Some((nv, nc));
            continue;
        }
        let Some((nv, _)) = header else {
            return Err(format_err(line_no, "clause before problem line"));
        };
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| format_err(line_no, format!("bad literal `{tok}`")))?;
            if x == 0 {
                db.clauses.push(std::mem::take(&mut current));
                seen += 1;
            } else {
                if x.unsigned_abs() as usize > nv {
                    return Err(format_err(line_no, format!("literal {x} exceeds declared variables")));
                }
                current.push(Lit::from_dimacs(x));
            }
        }
    }
    let Some((_, nc)) = header else {
        return Err(format_err(last_line.max(1), "missing problem line"));
    };
    if !current.is_empty() {
        return Err(format_err(last_line, "unterminated clause"));
    }
    if seen != nc {
        return Err(format_err(last_line, format!("declared {nc} clauses, found {seen}")));
    }
    Ok(db)
}
