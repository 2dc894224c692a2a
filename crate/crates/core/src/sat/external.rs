//! External solver bridge: DIMACS in a temp file, `s`/`v` lines back.

use std::fmt::Write as _;

use super::{Outcome, SolveError, SolveVerdict};
use crate::clock::Deadline;
use crate::cnf::{CnfFormula, Model};

/// Parses the competition output convention: `s SATISFIABLE`,
/// `s UNSATISFIABLE` or `s UNKNOWN`, with the model on `v` lines.
/// Variables missing from the `v` lines are false.
pub fn parse_solver_output(stdout: &str, num_vars: u32, stderr: &str) -> Result<Outcome, SolveError> {
    let mut status = None;
    let mut model = Model::all_false(num_vars);
    for (i, line) in stdout.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let lit: i64 = tok
                    .parse()
                    .map_err(|_| SolveError::Output { line: i + 1, message: format!("bad literal '{tok}'") })?;
                if lit == 0 {
                    continue;
                }
                let var = lit.unsigned_abs();
                if var > u64::from(num_vars) {
                    return Err(SolveError::Output {
                        line: i + 1,
                        message: format!("variable {var} exceeds {num_vars}"),
                    });
                }
                model.set(var as u32, lit > 0);
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => Ok(Outcome::Sat(model)),
        Some("UNSATISFIABLE") => Ok(Outcome::Unsat),
        Some("UNKNOWN") => Ok(Outcome::Timeout),
        Some(other) => Err(SolveError::Output { line: 0, message: format!("unknown status '{other}'") }),
        None => Err(SolveError::NoStatus { stderr: stderr.to_string() }),
    }
}

/// Writes a verdict in the same convention, for use as an external solver.
pub fn render_solver_output(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Sat(model) => {
            let mut out = String::from("s SATISFIABLE\n");
            for chunk in (1..=model.num_vars()).collect::<Vec<_>>().chunks(20) {
                out.push('v');
                for &v in chunk {
                    let _ = write!(out, " {}", if model.value(v) { v as i64 } else { -(v as i64) });
                }
                out.push('\n');
            }
            out.push_str("v 0\n");
            out
        }
        Outcome::Unsat => "s UNSATISFIABLE\n".to_string(),
        Outcome::Timeout => "s UNKNOWN\n".to_string(),
    }
}

#[cfg(target_arch = "wasm32")]
pub(super) fn solve(_: &CnfFormula, _: &str, _: Deadline) -> Result<SolveVerdict, SolveError> {
    Err(SolveError::Unsupported)
}

#[cfg(not(target_arch = "wasm32"))]
pub(super) fn solve(formula: &CnfFormula, command: &str, deadline: Deadline) -> Result<SolveVerdict, SolveError> {
    use std::io::{Read, Write};
    use std::process::{Command, Stdio};

    use super::{check_model, SolverStats};
    use std::time::Duration;

    use crate::clock::Stopwatch;
    use crate::cnf::to_dimacs;

    let watch = Stopwatch::start();
    let mut file = tempfile::Builder::new().prefix("mddsat-").suffix(".cnf").tempfile().map_err(SolveError::Spawn)?;
    file.write_all(to_dimacs(formula).as_bytes()).map_err(SolveError::Spawn)?;
    file.flush().map_err(SolveError::Spawn)?;
    let path = file.path().to_string_lossy().into_owned();

    let mut parts: Vec<String> = command.split_whitespace().map(str::to_string).collect();
    if parts.is_empty() {
        return Err(SolveError::Spawn(std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty solver command")));
    }
    if parts.iter().any(|p| p.contains("{}")) {
        for p in &mut parts {
            *p = p.replace("{}", &path);
        }
    } else {
        parts.push(path);
    }

    let mut child = Command::new(&parts[0])
        .args(&parts[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(SolveError::Spawn)?;
    let mut stdout_pipe = child.stdout.take().expect("stdout is piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr_pipe.read_to_string(&mut s);
        s
    });

    // exit status is ignored; only the s/v lines count
    let timed_out = loop {
        match child.try_wait().map_err(SolveError::Spawn)? {
            Some(_) => break false,
            None if deadline.expired() => {
                let _ = child.kill();
                let _ = child.wait();
                break true;
            }
            None => std::thread::sleep(Duration::from_millis(2)),
        }
    };
    if timed_out {
        // grandchildren may still hold the pipes open, so the readers are
        // left to finish on their own
        return Ok(SolveVerdict {
            outcome: Outcome::Timeout,
            stats: SolverStats { wall_time: watch.elapsed(), ..SolverStats::default() },
        });
    }
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    let stats = SolverStats { wall_time: watch.elapsed(), ..SolverStats::default() };
    let outcome = parse_solver_output(&stdout, formula.num_vars(), &stderr)?;
    if let Outcome::Sat(model) = &outcome {
        if !check_model(formula, model) {
            return Err(SolveError::InvalidModel);
        }
    }
    Ok(SolveVerdict { outcome, stats })
}
