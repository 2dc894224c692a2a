use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mddsat::bench::{self, Campaign};
use mddsat::cnf::{encode, from_dimacs, to_dimacs, EncodeParams, Encoding};
use mddsat::instance::{
    generate_random_instance, parse_instance_json, parse_map, parse_plan_json, parse_scenario, plan_to_json,
    render_instance_json, render_map, validate, ConflictPolicy, CostSemantics, GeneratorParams, MapfInstance,
};
use mddsat::oracle::{optimal_sum_of_costs, OracleLimits, OracleOutcome};
use mddsat::sat::{self, render_solver_output, Backend, BackendConfig, Outcome};
use mddsat::solver::{self, Algorithm, Epsilon, SolveOptions, SolveOutcome};
use mddsat::teg::build_teg;

const EXIT_FAILURE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_RESOURCES: u8 = 4;

#[derive(Parser)]
#[command(name = "mapf", version, about = "SAT-based sum-of-costs multi-agent path finding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Run a campaign and write CSV tables.
    Bench(BenchArgs),
    /// Exact optimum by joint-state search (small instances only).
    Oracle(OracleArgs),
    /// Check a plan against an instance.
    Validate(ValidateArgs),
    /// Generate a random grid instance.
    Generate(GenerateArgs),
    /// Write the CNF of one iteration as DIMACS.
    Encode(EncodeArgs),
    /// Solve a DIMACS file with the built-in solver, printing s/v lines.
    DimacsSolve(DimacsSolveArgs),
    /// Print an agent's time expansion graph.
    Teg(TegArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON document.
    #[arg(long, conflicts_with_all = ["map", "scen"])]
    instance: Option<PathBuf>,
    /// Grid map file.
    #[arg(long, requires = "scen")]
    map: Option<PathBuf>,
    /// Scenario file (paired with --map).
    #[arg(long, requires = "map")]
    scen: Option<PathBuf>,
    /// Use the first N scenario rows.
    #[arg(long)]
    agents: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum Alg {
    MddSat,
    UMddSat,
    EMddSat,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Internal,
    External,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "internal")]
    backend: BackendKind,
    /// External solver command; `{}` marks the DIMACS path.
    #[arg(long, required_if_eq("backend", "external"))]
    solver_cmd: Option<String>,
    /// Seed for the built-in solver's initial variable order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BackendArgs {
    fn config(&self) -> BackendConfig {
        BackendConfig {
            backend: match self.backend {
                BackendKind::Internal => Backend::Internal,
                BackendKind::External => Backend::External { command: self.solver_cmd.clone().unwrap_or_default() },
            },
            seed: self.seed,
            time_limit: None,
            memory_limit_mb: None,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, value_enum, default_value = "mdd-sat")]
    alg: Alg,
    /// Suboptimality factor for e-mdd-sat.
    #[arg(long, default_value = "0")]
    epsilon: Epsilon,
    /// Seconds for the whole solve.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value = "swap")]
    policy: ConflictPolicy,
    #[command(flatten)]
    backend: BackendArgs,
    /// Largest Δ tried (default |V|³).
    #[arg(long)]
    delta_cap: Option<u32>,
    /// Plan JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Campaign TOML file.
    #[arg(long, conflicts_with = "preset")]
    campaign: Option<PathBuf>,
    /// Built-in campaign: desk or paper.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Override the per-run time limit (seconds).
    #[arg(long)]
    time_limit: Option<f64>,
    /// Print the campaign as TOML and exit.
    #[arg(long)]
    print: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    GoalWaitFree,
    ArrivalTime,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, default_value = "swap")]
    policy: ConflictPolicy,
    #[arg(long, value_enum, default_value = "goal-wait-free")]
    semantics: Semantics,
    #[arg(long, default_value_t = OracleLimits::default().max_agents)]
    max_agents: usize,
    #[arg(long, default_value_t = OracleLimits::default().max_vertices)]
    max_vertices: usize,
    #[arg(long, default_value_t = OracleLimits::default().max_states)]
    max_states: usize,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Witness plan JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = "swap")]
    policy: ConflictPolicy,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 0.1)]
    obstacles: f64,
    #[arg(long, default_value_t = 4)]
    agents: usize,
    #[arg(long, default_value_t = 16)]
    walk: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance JSON output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the grid as a map file.
    #[arg(long)]
    map_out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Extra-cost budget Δ; the makespan is μ0 + Δ.
    #[arg(long, default_value_t = 0)]
    delta: u32,
    /// Cardinality bound; defaults to Δ.
    #[arg(long, conflicts_with = "no_cardinality")]
    cardinality: Option<u32>,
    #[arg(long)]
    no_cardinality: bool,
    #[arg(long, default_value = "swap")]
    policy: ConflictPolicy,
    /// DIMACS output.
    #[arg(long)]
    out: PathBuf,
    /// Variable map JSON output.
    #[arg(long)]
    varmap: Option<PathBuf>,
}

#[derive(Args)]
struct DimacsSolveArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct TegArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    agent: usize,
    #[arg(long, default_value_t = 0)]
    delta: u32,
    /// Depth; defaults to μ0 + Δ.
    #[arg(long)]
    mu: Option<u32>,
    /// Graphviz output instead of the text listing.
    #[arg(long)]
    dot: bool,
}

type CliResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Encode(a) => cmd_encode(a),
        Command::DimacsSolve(a) => cmd_dimacs_solve(a),
        Command::Teg(a) => cmd_teg(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("mapf: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, String> {
    s.map(|s| Duration::try_from_secs_f64(s).map_err(|_| format!("invalid time limit {s}"))).transpose()
}

fn load(args: &InstanceArgs) -> Result<MapfInstance, String> {
    if let Some(path) = &args.instance {
        let inst = parse_instance_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(match args.agents {
            Some(k) if k < inst.agent_count() => inst.truncated(k),
            _ => inst,
        });
    }
    let (Some(map), Some(scen)) = (&args.map, &args.scen) else {
        return Err("give --instance or both --map and --scen".into());
    };
    let graph = parse_map(&read(map)?).map_err(|e| format!("{}: {e}", map.display()))?;
    let pairs = parse_scenario(&read(scen)?, &graph).map_err(|e| format!("{}: {e}", scen.display()))?;
    let k = args.agents.unwrap_or(pairs.len());
    if k > pairs.len() {
        return Err(format!("{} has {} agents, {k} requested", scen.display(), pairs.len()));
    }
    MapfInstance::from_pairs(graph, pairs[..k].iter().copied()).map_err(|e| e.to_string())
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let instance = load(&a.input)?;
    let algorithm = match a.alg {
        Alg::MddSat => Algorithm::MddSat,
        Alg::UMddSat => Algorithm::UMddSat,
        Alg::EMddSat => Algorithm::EMddSat { epsilon: a.epsilon },
    };
    let options = SolveOptions {
        policy: a.policy,
        backend: a.backend.config(),
        delta_cap: a.delta_cap,
        time_limit: seconds(a.time_limit)?,
    };
    let report = solver::solve(&instance, algorithm, &options).map_err(|e| e.to_string())?;
    if let Some(path) = &a.report {
        write(path, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    }
    let c = &report.certificates;
    match &report.outcome {
        SolveOutcome::Solved { plan, delta, soc, soc_arrival_time, makespan } => {
            println!(
                "solved {algorithm}: soc={soc} soc_arrival_time={soc_arrival_time} makespan={makespan} delta={delta}"
            );
            println!("lower_bound={} upper_bound={soc}", c.lower_bound);
            if let Some(r) = c.effective_ratio {
                println!("effective_ratio={r}");
            }
            if let Some(holds) = c.bound_holds {
                println!("bound_holds={holds}");
            }
            if let Some(path) = &a.out {
                let doc = plan_to_json(plan, instance.graph());
                write(path, &(serde_json::to_string_pretty(&doc).expect("plan serializes") + "\n"))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        SolveOutcome::BudgetExhausted { delta_cap } => {
            eprintln!("mapf: no plan found up to delta cap {delta_cap} (lower bound {})", c.lower_bound);
            Ok(ExitCode::from(EXIT_BUDGET))
        }
        SolveOutcome::Timeout => {
            eprintln!("mapf: time limit reached (lower bound {})", c.lower_bound);
            Ok(ExitCode::from(EXIT_TIMEOUT))
        }
    }
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let (mut campaign, base) = match (&a.campaign, &a.preset) {
        (Some(path), _) => {
            let c = Campaign::from_toml(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            (c, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        (None, Some(name)) => (Campaign::preset(name).map_err(|e| e.to_string())?, PathBuf::from(".")),
        (None, None) => return Err("give --campaign FILE or --preset NAME".into()),
    };
    if let Some(w) = a.workers {
        campaign.workers = w;
    }
    if let Some(t) = a.time_limit {
        campaign.time_limit_s = t;
    }
    if a.print {
        print!("{}", campaign.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    let progress = |row: &bench::ResultRow| {
        eprintln!("{} {} {} {:.1}ms", row.instance, row.solver, row.status, row.wall_ms);
    };
    let result = bench::run_campaign(&campaign, &base, &progress).map_err(|e| e.to_string())?;
    let summary = bench::summarize(&campaign, &result);
    bench::write_outputs(&a.out, &result, &summary).map_err(|e| e.to_string())?;
    for (solver, s) in &summary.success {
        println!("{solver}: {}/{} solved", s.solved, s.total);
    }
    let r = &summary.relaxation;
    if let (Some(c), Some(u)) = (r.median_constrained_ms, r.median_relaxed_ms) {
        println!(
            "hardest quartile ({} instances): median solve {c:.2}ms with cardinality, {u:.2}ms without",
            r.instances
        );
    }
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> CliResult {
    let instance = load(&a.input)?;
    let limits = OracleLimits {
        max_agents: a.max_agents,
        max_vertices: a.max_vertices,
        max_states: a.max_states,
        time_limit: seconds(a.time_limit)?,
    };
    let semantics = match a.semantics {
        Semantics::GoalWaitFree => CostSemantics::GoalWaitFree,
        Semantics::ArrivalTime => CostSemantics::ArrivalTime,
    };
    match optimal_sum_of_costs(&instance, a.policy, semantics, &limits) {
        OracleOutcome::Optimal { cost, plan } => {
            println!("{cost}");
            if let Some(path) = &a.out {
                let doc = plan_to_json(&plan, instance.graph());
                write(path, &(serde_json::to_string_pretty(&doc).expect("plan serializes") + "\n"))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        OracleOutcome::Unsolvable => {
            println!("unsolvable");
            Ok(ExitCode::from(EXIT_BUDGET))
        }
        OracleOutcome::ResourceExceeded { reason } => {
            eprintln!("mapf: resource exceeded: {reason}");
            Ok(ExitCode::from(EXIT_RESOURCES))
        }
    }
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    let instance = load(&a.input)?;
    let plan = parse_plan_json(&read(&a.plan)?).map_err(|e| format!("{}: {e}", a.plan.display()))?;
    let report = validate(&instance, &plan, a.policy);
    for v in &report.violations {
        println!("t={} {:?} agents={:?}", v.time, v.kind, v.agents);
    }
    if report.valid {
        let c = report.costs.expect("valid plans have costs");
        println!("valid: soc={} soc_arrival_time={} makespan={}", c.goal_wait_free_soc, c.arrival_time_soc, c.makespan);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("invalid: {} violation(s)", report.violations.len());
        Ok(ExitCode::from(EXIT_BUDGET))
    }
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let params = GeneratorParams {
        width: a.width,
        height: a.height,
        obstacle_ratio: a.obstacles,
        agents: a.agents,
        walk_length: a.walk,
    };
    let inst = generate_random_instance(&params, a.seed).map_err(|e| e.to_string())?;
    let text = render_instance_json(&inst);
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &a.map_out {
        write(p, &render_map(inst.graph()).map_err(|e| e.to_string())?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_encode(a: EncodeArgs) -> CliResult {
    let instance = load(&a.input)?;
    let sic = mddsat::teg::compute_sic(&instance).map_err(|e| e.to_string())?;
    let params = EncodeParams {
        mu: sic.mu0 + a.delta,
        delta: a.delta,
        cardinality: if a.no_cardinality { None } else { Some(a.cardinality.unwrap_or(a.delta)) },
        policy: a.policy,
    };
    match encode(&instance, &params).map_err(|e| e.to_string())? {
        Encoding::TriviallyUnsat(e) => {
            // an empty formula stands in for "no plan in this corridor"
            write(&a.out, "p cnf 0 1\n0\n")?;
            eprintln!("mapf: {e}; wrote an unsatisfiable formula");
        }
        Encoding::Formula(f) => {
            write(&a.out, &to_dimacs(&f.formula))?;
            if let Some(p) = &a.varmap {
                let mut doc = f.varmap.to_json();
                doc["mu"] = f.mu.into();
                doc["stats"] = serde_json::to_value(&f.stats).expect("stats serialize");
                write(p, &(serde_json::to_string_pretty(&doc).expect("varmap serializes") + "\n"))?;
            }
            println!("mu={} variables={} clauses={}", f.mu, f.stats.variables, f.stats.clauses);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_dimacs_solve(a: DimacsSolveArgs) -> CliResult {
    let formula = from_dimacs(&read(&a.file)?).map_err(|e| format!("{}: {e}", a.file.display()))?;
    let config = BackendConfig { seed: a.seed, time_limit: seconds(a.time_limit)?, ..BackendConfig::default() };
    let verdict = sat::solve(&formula, &config).map_err(|e| e.to_string())?;
    print!("{}", render_solver_output(&verdict.outcome));
    Ok(ExitCode::from(match verdict.outcome {
        Outcome::Sat(_) => 10,
        Outcome::Unsat => 20,
        Outcome::Timeout => 0,
    }))
}

fn cmd_teg(a: TegArgs) -> CliResult {
    let instance = load(&a.input)?;
    if a.agent >= instance.agent_count() {
        return Err(format!("agent {} out of range ({} agents)", a.agent, instance.agent_count()));
    }
    let sic = mddsat::teg::compute_sic(&instance).map_err(|e| e.to_string())?;
    let mu = a.mu.unwrap_or(sic.mu0 + a.delta);
    let teg = build_teg(&instance, a.agent, mu, a.delta).map_err(|e| e.to_string())?;
    if a.dot {
        print!("{}", teg.to_dot(instance.graph()));
    } else {
        print!("{}", teg.to_listing(instance.graph()));
    }
    Ok(ExitCode::SUCCESS)
}
