//! The Δ loop: optimal MDD-SAT, unbounded uMDD-SAT and ε-bounded eMDD-SAT.
//!
//! Every iteration encodes the instance at makespan `μ0 + Δ`. The three
//! algorithms differ only in the cardinality bound `λ` on extra edges:
//! `Δ`, none, or `Δ + ⌊ε(ξ0 + Δ)⌋`.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Deadline, Stopwatch};
use crate::cnf::{decode, encode_with, DecodeError, EncodeParams, Encoding, EncodingStats};
use crate::instance::{agent_costs, ConflictPolicy, CostError, CostSemantics, MapfInstance, Plan};
use crate::sat::{self, BackendConfig, Outcome, SolveError, SolverStats};
use crate::teg::{DistanceTable, TegError};

/// A nonnegative rational suboptimality factor, parsed exactly from its
/// decimal text so that `⌊ε·n⌋` has no rounding surprises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Epsilon(Ratio<u64>);

impl Epsilon {
    pub const ZERO: Epsilon = Epsilon(Ratio::new_raw(0, 1));

    pub fn new(numer: u64, denom: u64) -> Option<Epsilon> {
        (denom != 0).then(|| Epsilon(Ratio::new(numer, denom)))
    }

    pub fn ratio(self) -> Ratio<u64> {
        self.0
    }

    /// Uses the shortest decimal text of `value`, so `0.1` means `1/10`.
    pub fn from_f64(value: f64) -> Option<Epsilon> {
        if !value.is_finite() || value < 0.0 {
            return None;
        }
        format!("{value}").parse().ok()
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// `⌊ε·n⌋`
    pub fn slack(self, n: u64) -> u64 {
        (u128::from(*self.0.numer()) * u128::from(n) / u128::from(*self.0.denom())) as u64
    }

    /// Whether `upper ≤ (1+ε)·lower` holds exactly.
    pub fn admits(self, upper: u64, lower: u64) -> bool {
        let (n, d) = (u128::from(*self.0.numer()), u128::from(*self.0.denom()));
        u128::from(upper) * d <= (d + n) * u128::from(lower)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid epsilon '{0}': expected a nonnegative decimal or fraction")]
pub struct EpsilonError(String);

impl FromStr for Epsilon {
    type Err = EpsilonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EpsilonError(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Epsilon::new(n, d).ok_or_else(bad);
        }
        let (mantissa, exp) = match t.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let digits = digits.trim_start_matches('0');
        let mut numer: u64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
        let scale = frac.len() as i32 - exp;
        let mut denom: u64 = 1;
        if scale >= 0 {
            denom = 10u64.checked_pow(scale as u32).ok_or_else(bad)?;
        } else {
            numer = numer.checked_mul(10u64.checked_pow((-scale) as u32).ok_or_else(bad)?).ok_or_else(bad)?;
        }
        Epsilon::new(numer, denom).ok_or_else(bad)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        // decimal when the denominator is 2^a·5^b, otherwise a fraction
        let mut rest = d;
        let mut twos = 0;
        let mut fives = 0;
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        let places = twos.max(fives);
        if rest != 1 || places > 18 {
            return write!(f, "{n}/{d}");
        }
        let scaled = u128::from(n) * (10u128.pow(places) / u128::from(d));
        let pow = 10u128.pow(places);
        if places == 0 {
            write!(f, "{}", scaled)
        } else {
            write!(f, "{}.{:0width$}", scaled / pow, scaled % pow, width = places as usize)
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Epsilon::from_f64(x).ok_or_else(|| serde::de::Error::custom(format!("invalid epsilon {x}"))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Algorithm {
    MddSat,
    UMddSat,
    EMddSat { epsilon: Epsilon },
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::MddSat => "mdd-sat".to_string(),
            Algorithm::UMddSat => "u-mdd-sat".to_string(),
            Algorithm::EMddSat { epsilon } => format!("e-mdd-sat({epsilon})"),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub policy: ConflictPolicy,
    pub backend: BackendConfig,
    /// Largest Δ tried; `None` means `|V|³`.
    pub delta_cap: Option<u32>,
    /// Budget for the whole session.
    #[serde(default, with = "crate::sat::opt_duration_ms")]
    pub time_limit: Option<Duration>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            policy: ConflictPolicy::Swap,
            backend: BackendConfig::default(),
            delta_cap: None,
            time_limit: None,
        }
    }
}

pub fn default_delta_cap(instance: &MapfInstance) -> u32 {
    let n = instance.graph().vertex_count() as u64;
    n.saturating_pow(3).clamp(1, u64::from(u32::MAX / 4)) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Sat,
    Unsat,
    /// Some agent has no path within the corridor; no formula was built.
    EmptyCorridor,
    Timeout,
}

impl Verdict {
    pub fn is_unsat(self) -> bool {
        matches!(self, Verdict::Unsat | Verdict::EmptyCorridor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub delta: u32,
    pub mu: u32,
    /// Extra-cost budget of the TEG corridors.
    pub corridor: u32,
    /// Bound requested on extra edges; `None` when the algorithm drops it.
    pub cardinality: Option<u32>,
    pub cardinality_skipped: bool,
    pub encoding: Option<EncodingStats>,
    pub verdict: Verdict,
    pub sat: Option<SolverStats>,
    pub encode_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SolveOutcome {
    Solved {
        plan: Plan,
        delta: u32,
        /// Goal-wait-free sum of costs.
        soc: u64,
        soc_arrival_time: u64,
        makespan: usize,
    },
    BudgetExhausted {
        delta_cap: u32,
    },
    Timeout,
}

impl SolveOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SolveOutcome::Solved { .. } => "solved",
            SolveOutcome::BudgetExhausted { .. } => "budget-exhausted",
            SolveOutcome::Timeout => "timeout",
        }
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveOutcome::Solved { plan, .. } => Some(plan),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// Proven lower bound on the optimal goal-wait-free sum of costs.
    pub lower_bound: u64,
    pub upper_bound: Option<u64>,
    pub upper_bound_arrival_time: Option<u64>,
    pub arrival_time_differs: bool,
    /// `k(μ0+Δ)/(ξ0+Δ)` at the final Δ.
    pub effective_ratio: Option<Ratio<u64>>,
    /// Ratio the algorithm guarantees: 1, 1+ε, or the effective ratio.
    pub guaranteed_ratio: Option<Ratio<u64>>,
    /// `upper ≤ guaranteed · lower`, checked exactly.
    pub bound_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub policy: ConflictPolicy,
    pub backend: String,
    pub seed: u64,
    pub agents: usize,
    pub sic: u32,
    pub mu0: u32,
    pub delta_cap: u32,
    pub outcome: SolveOutcome,
    pub iterations: Vec<IterationRecord>,
    pub certificates: Certificates,
    pub wall_ms: f64,
}

impl SolveReport {
    pub fn final_delta(&self) -> Option<u32> {
        self.iterations.last().map(|it| it.delta)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Unreachable(#[from] TegError),
    #[error("sat backend: {0}")]
    Sat(#[from] SolveError),
    #[error("decoding model at Δ={delta}: {source}")]
    Decode {
        delta: u32,
        #[source]
        source: DecodeError,
    },
    #[error("decoded plan: {0}")]
    Cost(#[from] CostError),
}

/// `k(μ0+Δ)/(ξ0+Δ)`, or `None` when `ξ0+Δ = 0`.
pub fn effective_bound(k: u64, mu0: u64, xi0: u64, delta: u64) -> Option<Ratio<u64>> {
    let den = xi0 + delta;
    (den > 0).then(|| Ratio::new(k * (mu0 + delta), den))
}

/// Smallest ε for which the cardinality-skip rule fires at `Δ`, i.e.
/// `ξ0 + Δ + ⌊ε(ξ0+Δ)⌋ ≥ k(μ0+Δ)`.
pub fn skip_epsilon(k: u64, mu0: u64, xi0: u64, delta: u64) -> Option<Ratio<u64>> {
    let n = xi0 + delta;
    let need = (k * (mu0 + delta)).saturating_sub(n);
    (n > 0).then(|| Ratio::new(need, n))
}

pub fn mdd_sat(instance: &MapfInstance, options: &SolveOptions) -> Result<SolveReport, SolverError> {
    solve(instance, Algorithm::MddSat, options)
}

pub fn u_mdd_sat(instance: &MapfInstance, options: &SolveOptions) -> Result<SolveReport, SolverError> {
    solve(instance, Algorithm::UMddSat, options)
}

pub fn e_mdd_sat(
    instance: &MapfInstance,
    epsilon: Epsilon,
    options: &SolveOptions,
) -> Result<SolveReport, SolverError> {
    solve(instance, Algorithm::EMddSat { epsilon }, options)
}

/// Budget of one iteration: corridor width and cardinality bound.
fn budget(algorithm: Algorithm, k: u64, mu: u32, xi0: u32, delta: u32) -> (u32, Option<u32>, bool) {
    match algorithm {
        Algorithm::MddSat => (delta, Some(delta), false),
        Algorithm::UMddSat => (delta, None, false),
        Algorithm::EMddSat { epsilon } => {
            let n = u64::from(xi0) + u64::from(delta);
            let relaxed = u64::from(delta) + epsilon.slack(n);
            let relaxed = relaxed.min(u64::from(u32::MAX)) as u32;
            let skip = n + epsilon.slack(n) >= u64::from(mu) * k;
            (relaxed, (!skip).then_some(relaxed), skip)
        }
    }
}

pub fn solve(
    instance: &MapfInstance,
    algorithm: Algorithm,
    options: &SolveOptions,
) -> Result<SolveReport, SolverError> {
    let session = Stopwatch::start();
    let deadline = Deadline::new(options.time_limit);
    let table = DistanceTable::compute(instance)?;
    let sic = table.sic().clone();
    let k = instance.agent_count() as u64;
    let delta_cap = options.delta_cap.unwrap_or_else(|| default_delta_cap(instance));

    let mut iterations = Vec::new();
    let mut outcome = SolveOutcome::BudgetExhausted { delta_cap };
    for delta in 0..=delta_cap {
        if deadline.expired() {
            outcome = SolveOutcome::Timeout;
            break;
        }
        let mu = sic.mu0 + delta;
        let (corridor, cardinality, skipped) = budget(algorithm, k, mu, sic.total, delta);
        let params = EncodeParams { mu, delta: corridor, cardinality, policy: options.policy };
        let watch = Stopwatch::start();
        let encoding = encode_with(instance, &table, &params);
        let encode_ms = ms(watch.elapsed());

        let mut record = IterationRecord {
            delta,
            mu,
            corridor,
            cardinality,
            cardinality_skipped: skipped,
            encoding: None,
            verdict: Verdict::EmptyCorridor,
            sat: None,
            encode_ms,
            solve_ms: 0.0,
        };
        let encoded = match encoding {
            Encoding::TriviallyUnsat(_) => {
                iterations.push(record);
                continue;
            }
            Encoding::Formula(f) => f,
        };
        record.encoding = Some(encoded.stats.clone());

        let budget = match (deadline.remaining(), options.backend.time_limit) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let verdict = sat::solve_with_deadline(&encoded.formula, &options.backend, Deadline::new(budget))?;
        record.solve_ms = ms(verdict.stats.wall_time);
        record.sat = Some(verdict.stats);
        match verdict.outcome {
            Outcome::Unsat => {
                record.verdict = Verdict::Unsat;
                iterations.push(record);
            }
            Outcome::Timeout => {
                record.verdict = Verdict::Timeout;
                iterations.push(record);
                outcome = SolveOutcome::Timeout;
                break;
            }
            Outcome::Sat(model) => {
                record.verdict = Verdict::Sat;
                iterations.push(record);
                let plan = decode(&model, &encoded.varmap, instance, mu)
                    .map_err(|source| SolverError::Decode { delta, source })?;
                let soc = total(&plan, instance, CostSemantics::GoalWaitFree)?;
                let soc_arrival_time = total(&plan, instance, CostSemantics::ArrivalTime)?;
                outcome = SolveOutcome::Solved { makespan: plan.makespan(), plan, delta, soc, soc_arrival_time };
                break;
            }
        }
    }

    let unsat_prefix = iterations.iter().take_while(|it| it.verdict.is_unsat()).count() as u64;
    let lower_bound = u64::from(sic.total) + unsat_prefix;
    let final_delta = iterations.last().map_or(0, |it| u64::from(it.delta));
    let effective_ratio = effective_bound(k, u64::from(sic.mu0), u64::from(sic.total), final_delta);
    let (upper, upper_at) = match &outcome {
        SolveOutcome::Solved { soc, soc_arrival_time, .. } => (Some(*soc), Some(*soc_arrival_time)),
        _ => (None, None),
    };
    let guaranteed_ratio = match algorithm {
        Algorithm::MddSat => Some(Ratio::from_integer(1)),
        Algorithm::EMddSat { epsilon } => Some(epsilon.ratio() + 1),
        Algorithm::UMddSat => effective_ratio,
    };
    let bound_holds = upper.map(|u| match guaranteed_ratio {
        Some(r) => u128::from(u) * u128::from(*r.denom()) <= u128::from(*r.numer()) * u128::from(lower_bound),
        None => u == 0,
    });

    Ok(SolveReport {
        algorithm,
        policy: options.policy,
        backend: options.backend.backend.label(),
        seed: options.backend.seed,
        agents: instance.agent_count(),
        sic: sic.total,
        mu0: sic.mu0,
        delta_cap,
        outcome,
        iterations,
        certificates: Certificates {
            lower_bound,
            upper_bound: upper,
            upper_bound_arrival_time: upper_at,
            arrival_time_differs: upper != upper_at,
            effective_ratio,
            guaranteed_ratio,
            bound_holds,
        },
        wall_ms: ms(session.elapsed()),
    })
}

fn total(plan: &Plan, instance: &MapfInstance, semantics: CostSemantics) -> Result<u64, CostError> {
    Ok(agent_costs(plan, instance, semantics)?.iter().sum())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}
