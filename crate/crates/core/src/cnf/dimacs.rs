use std::fmt::Write as _;

use thiserror::Error;

use super::{CnfFormula, Lit};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("dimacs line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> DimacsError {
    DimacsError { line, message: message.into() }
}

/// Canonical DIMACS text: header, then one clause per line.
pub fn to_dimacs(formula: &CnfFormula) -> String {
    let mut out = String::with_capacity(16 + formula.literal_count() * 4);
    let _ = writeln!(out, "p cnf {} {}", formula.num_vars(), formula.clauses().len());
    for clause in formula.clauses() {
        for l in clause {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS CNF. Comment lines (`c ...`) are skipped anywhere, clauses
/// may span lines, and a trailing `%` line ends the input.
pub fn from_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut formula = CnfFormula::default();
    let mut current: Vec<Lit> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(line_no, format!("malformed header '{line}'")));
            }
            let vars = parts[2].parse().map_err(|_| err(line_no, format!("bad variable count '{}'", parts[2])))?;
            let clauses = parts[3].parse().map_err(|_| err(line_no, format!("bad clause count '{}'", parts[3])))?;
            formula = CnfFormula::new(vars);
            header = Some((vars, clauses));
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(err(line_no, "clause before 'p cnf' header"));
        };
        for tok in line.split_whitespace() {
            let lit: Lit = tok.parse().map_err(|_| err(line_no, format!("bad literal '{tok}'")))?;
            if lit == 0 {
                formula.add_clause(std::mem::take(&mut current));
            } else if lit.unsigned_abs() > vars {
                return Err(err(line_no, format!("literal {lit} exceeds declared {vars} variables")));
            } else {
                current.push(lit);
            }
        }
    }

    let Some((_, expected)) = header else {
        return Err(err(last_line.max(1), "missing 'p cnf' header"));
    };
    if !current.is_empty() {
        return Err(err(last_line, "last clause is not terminated by 0"));
    }
    if formula.clauses().len() != expected {
        return Err(err(last_line, format!("header declares {expected} clauses, found {}", formula.clauses().len())));
    }
    Ok(formula)
}
