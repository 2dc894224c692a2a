//! Experiment campaigns: instance sets × solver configurations, result
//! rows, success-rate tables and sorted runtime/cost exports.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{encode_with, EncodeParams, Encoding};
use crate::instance::{
    generate_random_instance, parse_map, parse_scenario, render_instance_json, ConflictPolicy, FormatError,
    GenerateError, GeneratorParams, MapfInstance,
};
use crate::sat::{self, BackendConfig, Outcome};
use crate::solver::{self, skip_epsilon, Algorithm, Epsilon, SolveOptions, SolveOutcome};
use crate::teg::DistanceTable;

/// Bumped whenever [`CSV_COLUMNS`] changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: &[&str] = &[
    "instance",
    "agents",
    "solver",
    "epsilon",
    "status",
    "solved",
    "wall_ms",
    "delta_final",
    "soc",
    "soc_arrival_time",
    "makespan",
    "sic",
    "mu0",
    "lower_bound",
    "effective_ratio",
    "skip_epsilon",
    "iterations",
    "variables",
    "clauses",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSource {
    /// Random grids, one instance per (agent count, seed).
    Generated {
        width: usize,
        height: usize,
        obstacle_ratio: f64,
        walk_length: usize,
        agents: Vec<usize>,
        first_seed: u64,
        seeds: u64,
    },
    /// The first `n` scenario rows on a benchmark map, for each `n` in
    /// `agents`. Paths are relative to the campaign file.
    Scenario { map: PathBuf, scenario: PathBuf, agents: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub name: String,
    pub source: InstanceSource,
    pub solvers: Vec<Algorithm>,
    #[serde(default)]
    pub policy: ConflictPolicy,
    #[serde(default)]
    pub backend: BackendConfig,
    /// Per-run limit in seconds.
    pub time_limit_s: f64,
    pub delta_cap: Option<u32>,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("campaign file: {0}")]
    Config(#[from] toml::de::Error),
    #[error("unknown preset '{0}' (expected desk or paper)")]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("scenario {path} has {available} agents, {wanted} requested")]
    ScenarioTooShort { path: PathBuf, available: usize, wanted: usize },
    #[error("generating {id}: {source}")]
    Generate {
        id: String,
        #[source]
        source: GenerateError,
    },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

fn eps(s: &str) -> Algorithm {
    Algorithm::EMddSat { epsilon: s.parse().expect("valid literal") }
}

impl Campaign {
    /// `desk`: 6×6 grids with 10% obstacles, k ∈ {2,3,4}, 5 s limits.
    /// `paper`: 32×32 grids, agent counts 1..=256, 500 s limits.
    pub fn preset(name: &str) -> Result<Campaign, BenchError> {
        match name {
            "desk" => Ok(Campaign {
                name: "desk".into(),
                source: InstanceSource::Generated {
                    width: 6,
                    height: 6,
                    obstacle_ratio: 0.1,
                    walk_length: 12,
                    agents: vec![2, 3, 4],
                    first_seed: 0,
                    seeds: 10,
                },
                solvers: vec![Algorithm::UMddSat, eps("0.1"), eps("0.05"), eps("0.01"), Algorithm::MddSat],
                policy: ConflictPolicy::Swap,
                backend: BackendConfig::default(),
                time_limit_s: 5.0,
                delta_cap: None,
                workers: 1,
            }),
            "paper" => Ok(Campaign {
                name: "paper".into(),
                source: InstanceSource::Generated {
                    width: 32,
                    height: 32,
                    obstacle_ratio: 0.1,
                    walk_length: 256,
                    agents: paper_agent_schedule(),
                    first_seed: 0,
                    seeds: 10,
                },
                solvers: vec![
                    Algorithm::UMddSat,
                    eps("0.1"),
                    eps("0.05"),
                    eps("0.01"),
                    eps("0.001"),
                    Algorithm::MddSat,
                ],
                policy: ConflictPolicy::Swap,
                backend: BackendConfig::default(),
                time_limit_s: 500.0,
                delta_cap: None,
                workers: 1,
            }),
            other => Err(BenchError::UnknownPreset(other.to_string())),
        }
    }

    pub fn from_toml(text: &str) -> Result<Campaign, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("campaign serializes")
    }

    /// Builds the instance set. Generated sets are a pure function of the
    /// campaign; `base` resolves relative scenario paths.
    pub fn instances(&self, base: &Path) -> Result<Vec<CampaignInstance>, BenchError> {
        match &self.source {
            InstanceSource::Generated { width, height, obstacle_ratio, walk_length, agents, first_seed, seeds } => {
                let mut out = Vec::new();
                for &k in agents {
                    for seed in *first_seed..first_seed + seeds {
                        let id = format!("g{width}x{height}-k{k}-s{seed}");
                        let params = GeneratorParams {
                            width: *width,
                            height: *height,
                            obstacle_ratio: *obstacle_ratio,
                            agents: k,
                            walk_length: *walk_length,
                        };
                        let instance = generate_random_instance(&params, seed)
                            .map_err(|source| BenchError::Generate { id: id.clone(), source })?;
                        out.push(CampaignInstance { id, instance });
                    }
                }
                Ok(out)
            }
            InstanceSource::Scenario { map, scenario, agents } => {
                let map_path = base.join(map);
                let scen_path = base.join(scenario);
                let read = |p: &Path| {
                    std::fs::read_to_string(p).map_err(|source| BenchError::Io { path: p.to_path_buf(), source })
                };
                let graph = parse_map(&read(&map_path)?)
                    .map_err(|source| BenchError::Format { path: map_path.clone(), source })?;
                let pairs = parse_scenario(&read(&scen_path)?, &graph)
                    .map_err(|source| BenchError::Format { path: scen_path.clone(), source })?;
                let stem = map_path.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned());
                let mut out = Vec::new();
                for &k in agents {
                    if k > pairs.len() {
                        return Err(BenchError::ScenarioTooShort {
                            path: scen_path,
                            available: pairs.len(),
                            wanted: k,
                        });
                    }
                    let instance =
                        MapfInstance::from_pairs(graph.clone(), pairs[..k].iter().copied()).map_err(|e| {
                            BenchError::Format { path: scen_path.clone(), source: FormatError::Instance(e) }
                        })?;
                    out.push(CampaignInstance { id: format!("{stem}-k{k}"), instance });
                }
                Ok(out)
            }
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let limit = Duration::from_secs_f64(self.time_limit_s.max(0.0));
        SolveOptions {
            policy: self.policy,
            backend: self.backend.clone(),
            delta_cap: self.delta_cap,
            time_limit: Some(limit),
        }
    }
}

/// Agent counts of the `paper` preset: 1, 2, 4, 8, then steps of 8 up to
/// 64 and steps of 16 up to 256.
pub fn paper_agent_schedule() -> Vec<usize> {
    let mut v = vec![1, 2, 4];
    v.extend((8..=64).step_by(8));
    v.extend((80..=256).step_by(16));
    v
}

#[derive(Debug, Clone)]
pub struct CampaignInstance {
    pub id: String,
    pub instance: MapfInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: String,
    pub agents: usize,
    pub solver: String,
    pub epsilon: Option<String>,
    pub status: String,
    pub solved: bool,
    pub wall_ms: f64,
    pub delta_final: Option<u32>,
    pub soc: Option<u64>,
    pub soc_arrival_time: Option<u64>,
    pub makespan: Option<usize>,
    pub sic: Option<u32>,
    pub mu0: Option<u32>,
    pub lower_bound: Option<u64>,
    pub effective_ratio: Option<String>,
    /// Smallest ε at which the cardinality-skip rule fires at `delta_final`.
    pub skip_epsilon: Option<f64>,
    pub iterations: usize,
    /// Size of the last formula built.
    pub variables: Option<u32>,
    pub clauses: Option<usize>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn key(&self) -> (String, String) {
        (self.instance.clone(), self.solver.clone())
    }
}

pub fn run_one(item: &CampaignInstance, algorithm: Algorithm, options: &SolveOptions) -> ResultRow {
    let mut row = ResultRow {
        instance: item.id.clone(),
        agents: item.instance.agent_count(),
        solver: algorithm.label(),
        epsilon: match algorithm {
            Algorithm::EMddSat { epsilon } => Some(epsilon.to_string()),
            _ => None,
        },
        status: "error".into(),
        solved: false,
        wall_ms: 0.0,
        delta_final: None,
        soc: None,
        soc_arrival_time: None,
        makespan: None,
        sic: None,
        mu0: None,
        lower_bound: None,
        effective_ratio: None,
        skip_epsilon: None,
        iterations: 0,
        variables: None,
        clauses: None,
        error: None,
    };
    let report = match solver::solve(&item.instance, algorithm, options) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.status = report.outcome.label().to_string();
    row.wall_ms = report.wall_ms;
    row.delta_final = report.final_delta();
    row.sic = Some(report.sic);
    row.mu0 = Some(report.mu0);
    row.lower_bound = Some(report.certificates.lower_bound);
    row.effective_ratio = report.certificates.effective_ratio.map(|r| r.to_string());
    row.iterations = report.iterations.len();
    if let Some(stats) = report.iterations.iter().rev().find_map(|it| it.encoding.as_ref()) {
        row.variables = Some(stats.variables);
        row.clauses = Some(stats.clauses);
    }
    let k = row.agents as u64;
    row.skip_epsilon =
        skip_epsilon(k, report.mu0.into(), report.sic.into(), row.delta_final.unwrap_or(0).into()).map(ratio_f64);
    if let SolveOutcome::Solved { soc, soc_arrival_time, makespan, .. } = report.outcome {
        row.solved = true;
        row.soc = Some(soc);
        row.soc_arrival_time = Some(soc_arrival_time);
        row.makespan = Some(makespan);
    }
    row
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub instances: Vec<CampaignInstance>,
    pub rows: Vec<ResultRow>,
}

/// Runs every (instance, solver) pair. Rows come back in instance-major,
/// solver-minor order whatever the worker count.
pub fn run_campaign(
    campaign: &Campaign,
    base: &Path,
    progress: &(dyn Fn(&ResultRow) + Sync),
) -> Result<CampaignResult, BenchError> {
    let instances = campaign.instances(base)?;
    let options = campaign.solve_options();
    let jobs: Vec<(usize, Algorithm)> =
        (0..instances.len()).flat_map(|i| campaign.solvers.iter().map(move |&a| (i, a))).collect();
    let slots: Vec<Mutex<Option<ResultRow>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(i, alg)) = jobs.get(j) else { break };
        let row = run_one(&instances[i], alg, &options);
        progress(&row);
        *slots[j].lock().expect("slot lock") = Some(row);
    };
    let workers = campaign.workers.clamp(1, jobs.len().max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    let rows = slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every job ran")).collect();
    Ok(CampaignResult { instances, rows })
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        let opt = |v: Option<String>| v.unwrap_or_default();
        w.write_record([
            r.instance.clone(),
            r.agents.to_string(),
            r.solver.clone(),
            opt(r.epsilon.clone()),
            r.status.clone(),
            r.solved.to_string(),
            format!("{:.3}", r.wall_ms),
            opt(r.delta_final.map(|v| v.to_string())),
            opt(r.soc.map(|v| v.to_string())),
            opt(r.soc_arrival_time.map(|v| v.to_string())),
            opt(r.makespan.map(|v| v.to_string())),
            opt(r.sic.map(|v| v.to_string())),
            opt(r.mu0.map(|v| v.to_string())),
            opt(r.lower_bound.map(|v| v.to_string())),
            opt(r.effective_ratio.clone()),
            opt(r.skip_epsilon.map(|v| format!("{v:.4}"))),
            r.iterations.to_string(),
            opt(r.variables.map(|v| v.to_string())),
            opt(r.clauses.map(|v| v.to_string())),
            opt(r.error.clone()),
        ])?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, BenchError> {
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Columns of the success-rate table: solvers ordered from loosest to
/// tightest guarantee, so the bound axis runs from large to 1.0.
fn solver_order(rows: &[ResultRow]) -> Vec<String> {
    let mut seen: BTreeMap<String, (u8, std::cmp::Reverse<Option<Epsilon>>)> = BTreeMap::new();
    for r in rows {
        let eps = r.epsilon.as_deref().and_then(|e| e.parse::<Epsilon>().ok());
        let group = match r.solver.as_str() {
            "u-mdd-sat" => 0,
            "mdd-sat" => 2,
            _ => 1,
        };
        seen.entry(r.solver.clone()).or_insert((group, std::cmp::Reverse(eps)));
    }
    let mut v: Vec<_> = seen.into_iter().collect();
    v.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(s, _)| s).collect()
}

fn bound_label(solver: &str, rows: &[ResultRow]) -> String {
    match rows.iter().find(|r| r.solver == solver).and_then(|r| r.epsilon.clone()) {
        Some(e) => {
            let e: Epsilon = e.parse().expect("epsilon written by us");
            format!("{solver} [bound {}]", ratio_f64(e.ratio() + 1))
        }
        None if solver == "mdd-sat" => format!("{solver} [bound 1]"),
        None => solver.to_string(),
    }
}

/// Success rate per agent count (rows) and solver (columns).
pub fn success_rate_csv(rows: &[ResultRow]) -> Result<String, BenchError> {
    let solvers = solver_order(rows);
    let mut by_k: BTreeMap<usize, BTreeMap<&str, (usize, usize)>> = BTreeMap::new();
    for r in rows {
        let e = by_k.entry(r.agents).or_default().entry(r.solver.as_str()).or_default();
        e.0 += usize::from(r.solved);
        e.1 += 1;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["agents".to_string()];
    header.extend(solvers.iter().map(|s| bound_label(s, rows)));
    w.write_record(&header)?;
    for (k, cells) in &by_k {
        let mut rec = vec![k.to_string()];
        for s in &solvers {
            rec.push(match cells.get(s.as_str()) {
                Some(&(ok, n)) => format!("{:.3}", ok as f64 / n as f64),
                None => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    csv_string(w)
}

/// Long-format cactus data: solved runs of each solver sorted ascending.
pub fn sorted_csv(rows: &[ResultRow], column: SortedColumn) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["solver", "rank", column.name()])?;
    for s in solver_order(rows) {
        let mut values: Vec<f64> = rows
            .iter()
            .filter(|r| r.solver == s && r.solved)
            .filter_map(|r| match column {
                SortedColumn::WallMs => Some(r.wall_ms),
                SortedColumn::Soc => r.soc.map(|v| v as f64),
            })
            .collect();
        values.sort_by(f64::total_cmp);
        for (i, v) in values.iter().enumerate() {
            let cell = match column {
                SortedColumn::WallMs => format!("{v:.3}"),
                SortedColumn::Soc => format!("{v}"),
            };
            w.write_record([s.clone(), (i + 1).to_string(), cell])?;
        }
    }
    csv_string(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortedColumn {
    WallMs,
    Soc,
}

impl SortedColumn {
    fn name(self) -> &'static str {
        match self {
            SortedColumn::WallMs => "wall_ms",
            SortedColumn::Soc => "soc",
        }
    }
}

/// Time to decide the formula with and without the cardinality constraint
/// at the Δ where the optimal solver stopped, on the hardest quartile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationTrend {
    pub instances: usize,
    pub median_constrained_ms: Option<f64>,
    pub median_relaxed_ms: Option<f64>,
    pub samples: Vec<RelaxationSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSample {
    pub instance: String,
    pub delta: u32,
    pub constrained_ms: f64,
    pub relaxed_ms: f64,
}

pub fn relaxation_trend(
    instances: &[CampaignInstance],
    rows: &[ResultRow],
    policy: ConflictPolicy,
    backend: &BackendConfig,
) -> RelaxationTrend {
    let mut solved: Vec<(&ResultRow, &CampaignInstance)> = rows
        .iter()
        .filter(|r| r.solver == "mdd-sat" && r.solved)
        .filter_map(|r| instances.iter().find(|c| c.id == r.instance).map(|c| (r, c)))
        .collect();
    solved.sort_by(|a, b| b.0.wall_ms.total_cmp(&a.0.wall_ms).then(a.0.instance.cmp(&b.0.instance)));
    let quartile = solved.len().div_ceil(4);
    let mut samples = Vec::new();
    for (row, item) in solved.into_iter().take(quartile) {
        let delta = row.delta_final.unwrap_or(0);
        let Ok(table) = DistanceTable::compute(&item.instance) else { continue };
        let mu = table.sic().mu0 + delta;
        let time = |cardinality: Option<u32>| -> Option<f64> {
            let params = EncodeParams { mu, delta, cardinality, policy };
            let Encoding::Formula(f) = encode_with(&item.instance, &table, &params) else { return None };
            let v = sat::solve(&f.formula, backend).ok()?;
            (!matches!(v.outcome, Outcome::Timeout)).then_some(v.stats.wall_time.as_secs_f64() * 1000.0)
        };
        if let (Some(constrained_ms), Some(relaxed_ms)) = (time(Some(delta)), time(None)) {
            samples.push(RelaxationSample { instance: row.instance.clone(), delta, constrained_ms, relaxed_ms });
        }
    }
    let median = |mut v: Vec<f64>| -> Option<f64> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len().is_multiple_of(2) { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
    };
    RelaxationTrend {
        instances: samples.len(),
        median_constrained_ms: median(samples.iter().map(|s| s.constrained_ms).collect()),
        median_relaxed_ms: median(samples.iter().map(|s| s.relaxed_ms).collect()),
        samples,
    }
}

/// Concatenated instance documents; identical campaigns give identical text.
pub fn instance_set_text(instances: &[CampaignInstance]) -> String {
    let mut out = String::new();
    for c in instances {
        out.push_str(&format!("# {}\n", c.id));
        out.push_str(&render_instance_json(&c.instance));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub campaign: String,
    pub csv_schema_version: u32,
    pub rows: usize,
    pub success: BTreeMap<String, SuccessCount>,
    pub relaxation: RelaxationTrend,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuccessCount {
    pub solved: usize,
    pub total: usize,
}

pub fn summarize(campaign: &Campaign, result: &CampaignResult) -> Summary {
    let mut success: BTreeMap<String, SuccessCount> = BTreeMap::new();
    for r in &result.rows {
        let e = success.entry(r.solver.clone()).or_default();
        e.total += 1;
        e.solved += usize::from(r.solved);
    }
    Summary {
        campaign: campaign.name.clone(),
        csv_schema_version: CSV_SCHEMA_VERSION,
        rows: result.rows.len(),
        success,
        relaxation: relaxation_trend(&result.instances, &result.rows, campaign.policy, &campaign.backend),
    }
}

/// Writes `results.csv`, `success_rate.csv`, `runtime_sorted.csv`,
/// `soc_sorted.csv`, `instances.txt` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, result: &CampaignResult, summary: &Summary) -> Result<(), BenchError> {
    let io_err = |path: PathBuf| move |source| BenchError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io_err(dir.to_path_buf()))?;
    let files = [
        ("results.csv", rows_to_csv(&result.rows)?),
        ("success_rate.csv", success_rate_csv(&result.rows)?),
        ("runtime_sorted.csv", sorted_csv(&result.rows, SortedColumn::WallMs)?),
        ("soc_sorted.csv", sorted_csv(&result.rows, SortedColumn::Soc)?),
        ("instances.txt", instance_set_text(&result.instances)),
        ("summary.json", serde_json::to_string_pretty(summary).expect("summary serializes") + "\n"),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io_err(path.clone()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in ["desk", "paper"] {
            let c = Campaign::preset(name).unwrap();
            let back = Campaign::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
        }
        assert!(Campaign::preset("huge").is_err());
    }

    #[test]
    fn schedule_is_increasing_and_ends_at_256() {
        let s = paper_agent_schedule();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!((s[0], *s.last().unwrap()), (1, 256));
    }

    #[test]
    fn desk_instance_count() {
        let c = Campaign::preset("desk").unwrap();
        assert_eq!(c.instances(Path::new(".")).unwrap().len(), 30);
    }
}
