//! SAT solving with two interchangeable backends: the built-in CDCL solver
//! and an external process speaking DIMACS.

mod cdcl;
mod external;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Deadline;
use crate::cnf::{CnfFormula, Model};

pub use external::{parse_solver_output, render_solver_output};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Sat(Model),
    Unsat,
    Timeout,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Sat(_) => "sat",
            Outcome::Unsat => "unsat",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub learned_clauses: u64,
    pub deleted_clauses: u64,
    pub restarts: u64,
    #[serde(with = "duration_ms")]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveVerdict {
    pub outcome: Outcome,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Internal,
    /// Command template; `{}` is replaced by the DIMACS path, which is
    /// appended when the template has no placeholder.
    External { command: String },
}

impl Backend {
    pub fn label(&self) -> String {
        match self {
            Backend::Internal => "internal".to_string(),
            Backend::External { command } => format!("external:{command}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(flatten)]
    pub backend: Backend,
    /// Seeds the internal solver's initial variable order; `0` keeps the
    /// plain index order.
    pub seed: u64,
    #[serde(default, with = "opt_duration_ms")]
    pub time_limit: Option<Duration>,
    /// Internal backend only: cap on the learned-clause database.
    pub memory_limit_mb: Option<u64>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("failed to run external solver: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("external solver produced no 's' status line{}", stderr_suffix(.stderr))]
    NoStatus { stderr: String },
    #[error("external solver output line {line}: {message}")]
    Output { line: usize, message: String },
    #[error("external solver returned a model that violates the formula")]
    InvalidModel,
    #[error("learned clauses exceed the memory budget ({used} bytes)")]
    MemoryBudget { used: u64 },
    #[error("external solvers are not available on this platform")]
    Unsupported,
}

fn stderr_suffix(stderr: &str) -> String {
    let s = stderr.trim();
    if s.is_empty() {
        String::new()
    } else {
        format!(": {s}")
    }
}

/// Solves `formula` with the configured backend.
pub fn solve(formula: &CnfFormula, config: &BackendConfig) -> Result<SolveVerdict, SolveError> {
    solve_with_deadline(formula, config, Deadline::new(config.time_limit))
}

pub(crate) fn solve_with_deadline(
    formula: &CnfFormula,
    config: &BackendConfig,
    deadline: Deadline,
) -> Result<SolveVerdict, SolveError> {
    match &config.backend {
        Backend::Internal => {
            let mut solver = cdcl::Cdcl::new(formula, config.seed);
            let (outcome, stats) = solver
                .solve(&cdcl::Limits { deadline, memory_bytes: config.memory_limit_mb.map(|mb| mb * 1024 * 1024) })?;
            if let Outcome::Sat(model) = &outcome {
                debug_assert!(check_model(formula, model), "internal solver produced a bad model");
            }
            Ok(SolveVerdict { outcome, stats })
        }
        Backend::External { command } => external::solve(formula, command, deadline),
    }
}

/// True iff every clause of `formula` has a true literal under `model`.
pub fn check_model(formula: &CnfFormula, model: &Model) -> bool {
    model.num_vars() >= formula.num_vars() && formula.is_satisfied_by(model)
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0) / 1000.0))
    }
}

pub(crate) mod opt_duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&(d.as_secs_f64() * 1000.0)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(|ms| Duration::from_secs_f64(ms.max(0.0) / 1000.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn internal() -> BackendConfig {
        BackendConfig::default()
    }

    #[test]
    fn unit_clause() {
        let f = CnfFormula::from_clauses(1, vec![vec![1]]);
        let v = solve(&f, &internal()).unwrap();
        match v.outcome {
            Outcome::Sat(m) => {
                assert!(m.value(1));
                assert!(check_model(&f, &m));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contradiction() {
        let f = CnfFormula::from_clauses(1, vec![vec![1], vec![-1]]);
        assert_eq!(solve(&f, &internal()).unwrap().outcome, Outcome::Unsat);
    }

    #[test]
    fn flipped_model_fails_check() {
        let f = CnfFormula::from_clauses(2, vec![vec![1], vec![1, 2]]);
        let mut m = Model::new(vec![true, false]);
        assert!(check_model(&f, &m));
        m.set(1, false);
        assert!(!check_model(&f, &m));
        assert!(!check_model(&f, &Model::new(vec![true])));
    }

    #[test]
    fn config_serializes() {
        let cfg = BackendConfig {
            backend: Backend::External { command: "kissat -q {}".into() },
            seed: 3,
            time_limit: Some(Duration::from_millis(1500)),
            memory_limit_mb: None,
        };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: BackendConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
