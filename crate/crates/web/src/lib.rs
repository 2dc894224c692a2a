//! Browser demo bindings. Every export takes and returns JSON strings so
//! the page needs no generated type glue beyond `wasm-bindgen`'s.

use mddsat::instance::{
    generate_random_instance, parse_instance_json, plan_to_json, render_instance_json, ConflictPolicy, GeneratorParams,
};
use mddsat::solver::{self, Algorithm, Epsilon, SolveOptions};
use mddsat::teg::{build_teg, compute_sic, EdgeKind};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Random grid instance as instance JSON.
#[wasm_bindgen]
pub fn generate(
    width: usize,
    height: usize,
    obstacles: f64,
    agents: usize,
    walk: usize,
    seed: u64,
) -> Result<String, JsError> {
    js(generate_json(width, height, obstacles, agents, walk, seed))
}

pub fn generate_json(
    width: usize,
    height: usize,
    obstacles: f64,
    agents: usize,
    walk: usize,
    seed: u64,
) -> Result<String, String> {
    let params = GeneratorParams { width, height, obstacle_ratio: obstacles, agents, walk_length: walk };
    generate_random_instance(&params, seed).map(|i| render_instance_json(&i)).map_err(|e| e.to_string())
}

/// Solves an instance; returns `{report, plan}` where `plan` is null when
/// no plan was found.
#[wasm_bindgen]
pub fn solve(instance: &str, algorithm: &str, epsilon: &str, policy: &str, delta_cap: u32) -> Result<String, JsError> {
    js(solve_json(instance, algorithm, epsilon, policy, delta_cap))
}

pub fn solve_json(
    instance: &str,
    algorithm: &str,
    epsilon: &str,
    policy: &str,
    delta_cap: u32,
) -> Result<String, String> {
    let instance = parse_instance_json(instance).map_err(|e| e.to_string())?;
    let algorithm = match algorithm {
        "mdd-sat" => Algorithm::MddSat,
        "u-mdd-sat" => Algorithm::UMddSat,
        "e-mdd-sat" => Algorithm::EMddSat { epsilon: epsilon.parse::<Epsilon>().map_err(|e| e.to_string())? },
        other => return Err(format!("unknown algorithm '{other}'")),
    };
    let options = SolveOptions {
        policy: policy.parse::<ConflictPolicy>()?,
        delta_cap: Some(delta_cap),
        ..SolveOptions::default()
    };
    let report = solver::solve(&instance, algorithm, &options).map_err(|e| e.to_string())?;
    let plan = report.outcome.plan().map(|p| plan_to_json(p, instance.graph()));
    Ok(json!({ "report": report.to_json(), "plan": plan }).to_string())
}

/// One agent's time-expansion graph at depth μ0 + Δ as
/// `{mu, layers: [[cell]], edges: [{t, from, to, extra}]}` with grid cells
/// as `[x, y]`.
#[wasm_bindgen]
pub fn teg(instance: &str, agent: usize, delta: u32) -> Result<String, JsError> {
    js(teg_json(instance, agent, delta))
}

pub fn teg_json(instance: &str, agent: usize, delta: u32) -> Result<String, String> {
    let instance = parse_instance_json(instance).map_err(|e| e.to_string())?;
    if agent >= instance.agent_count() {
        return Err(format!("no agent {agent}"));
    }
    let grid = instance.graph().grid_layout().ok_or("the demo draws grid instances only")?;
    let mu = compute_sic(&instance).map_err(|e| e.to_string())?.mu0 + delta;
    let teg = build_teg(&instance, agent, mu, delta).map_err(|e| e.to_string())?;
    let cell = |v| {
        let c = grid.cell_of(v);
        [c.x, c.y]
    };
    let layers: Vec<Vec<[usize; 2]>> = teg.layers().iter().map(|l| l.iter().map(|&v| cell(v)).collect()).collect();
    let edges: Vec<_> = teg
        .edges()
        .iter()
        .map(|e| json!({ "t": e.time, "from": cell(e.from), "to": cell(e.to), "extra": e.kind == EdgeKind::Extra }))
        .collect();
    Ok(json!({ "mu": mu, "layers": layers, "edges": edges }).to_string())
}
