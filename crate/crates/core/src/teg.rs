//! Single-agent distances, the sum-of-individual-costs bound, and per-agent
//! time-expansion graphs (MDDs).
//!
//! A TEG of depth `μ` has layers `0..=μ`. Vertex `u` is kept in layer `t`
//! only if some length-`μ` walk from the start to the goal passes through
//! `u` at `t` with goal-wait-free cost at most `ξ0(a) + Δ`. An edge leaving
//! layer `t` is *extra* when `t ≥ ξ0(a)` and it is not the goal self-loop, so
//! the number of extra edges on any start-to-goal path equals that walk's
//! cost minus `ξ0(a)`.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Agent, Graph, MapfInstance, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TegError {
    #[error("goal of agent {agent} is unreachable from its start")]
    Unreachable { agent: usize },
    #[error("time-expansion graph of agent {agent} is empty at depth {mu} with budget {delta}")]
    Empty { agent: usize, mu: u32, delta: u32 },
}

/// Unweighted shortest-path distances from one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distances(Vec<Option<u32>>);

impl Distances {
    pub fn get(&self, v: VertexId) -> Option<u32> {
        self.0[v]
    }

    pub fn reachable(&self) -> impl Iterator<Item = (VertexId, u32)> + '_ {
        self.0.iter().enumerate().filter_map(|(v, d)| d.map(|d| (v, d)))
    }
}

pub fn bfs_distances(graph: &Graph, source: VertexId) -> Distances {
    let mut dist = vec![None; graph.vertex_count()];
    let mut queue = VecDeque::from([source]);
    dist[source] = Some(0);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap() + 1;
        for &v in graph.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(d);
                queue.push_back(v);
            }
        }
    }
    Distances(dist)
}

/// Shortest individual path costs and their sum and maximum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SicSummary {
    pub per_agent: Vec<u32>,
    /// `ξ0`
    pub total: u32,
    /// `μ0`
    pub mu0: u32,
}

/// Distances from an agent's start and to its goal.
#[derive(Debug, Clone)]
pub struct AgentDistances {
    pub from_start: Distances,
    pub to_goal: Distances,
    pub shortest: u32,
}

/// Per-agent distances for a whole instance, computed once per solve.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    agents: Vec<AgentDistances>,
    sic: SicSummary,
}

impl DistanceTable {
    pub fn compute(instance: &MapfInstance) -> Result<Self, TegError> {
        let graph = instance.graph();
        let agents = instance
            .agents()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let from_start = bfs_distances(graph, a.start);
                let shortest = from_start.get(a.goal).ok_or(TegError::Unreachable { agent: i })?;
                Ok(AgentDistances { from_start, to_goal: bfs_distances(graph, a.goal), shortest })
            })
            .collect::<Result<Vec<_>, TegError>>()?;
        let per_agent: Vec<u32> = agents.iter().map(|a| a.shortest).collect();
        let sic =
            SicSummary { total: per_agent.iter().sum(), mu0: per_agent.iter().copied().max().unwrap_or(0), per_agent };
        Ok(DistanceTable { agents, sic })
    }

    pub fn agent(&self, i: usize) -> &AgentDistances {
        &self.agents[i]
    }

    pub fn sic(&self) -> &SicSummary {
        &self.sic
    }
}

pub fn compute_sic(instance: &MapfInstance) -> Result<SicSummary, TegError> {
    Ok(DistanceTable::compute(instance)?.sic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Standard,
    Extra,
}

/// Directed edge `from^time -> to^(time+1)`. `from == to` is a wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TegEdge {
    pub time: u32,
    pub from: VertexId,
    pub to: VertexId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeExpansionGraph {
    agent: usize,
    start: VertexId,
    goal: VertexId,
    depth: u32,
    delta: u32,
    shortest: u32,
    /// Sorted vertex ids per layer.
    layers: Vec<Vec<VertexId>>,
    /// Sorted by `(time, from, to)`.
    edges: Vec<TegEdge>,
}

impl TimeExpansionGraph {
    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn goal(&self) -> VertexId {
        self.goal
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// `ξ0(a)` for this agent.
    pub fn shortest(&self) -> u32 {
        self.shortest
    }

    pub fn layers(&self) -> &[Vec<VertexId>] {
        &self.layers
    }

    pub fn layer(&self, t: u32) -> &[VertexId] {
        &self.layers[t as usize]
    }

    pub fn contains(&self, v: VertexId, t: u32) -> bool {
        self.layers.get(t as usize).is_some_and(|l| l.binary_search(&v).is_ok())
    }

    pub fn edges(&self) -> &[TegEdge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn extra_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Extra).count()
    }

    /// Edges leaving `v` at time `t`.
    pub fn out_edges(&self, v: VertexId, t: u32) -> &[TegEdge] {
        let lo = self.edges.partition_point(|e| (e.time, e.from) < (t, v));
        let hi = self.edges.partition_point(|e| (e.time, e.from) <= (t, v));
        &self.edges[lo..hi]
    }

    /// Layered text listing, one layer per line followed by its edges.
    pub fn to_listing(&self, graph: &Graph) -> String {
        let mut out = format!(
            "teg agent={} depth={} delta={} shortest={} vertices={} edges={} extra={}\n",
            self.agent,
            self.depth,
            self.delta,
            self.shortest,
            self.vertex_count(),
            self.edges.len(),
            self.extra_edge_count()
        );
        for (t, layer) in self.layers.iter().enumerate() {
            let names: Vec<String> = layer.iter().map(|&v| graph.label(v)).collect();
            let _ = writeln!(out, "layer {t}: {}", names.join(" "));
            for e in self.edges.iter().filter(|e| e.time as usize == t) {
                let _ = writeln!(
                    out,
                    "  {}^{} -> {}^{} {}",
                    graph.label(e.from),
                    t,
                    graph.label(e.to),
                    t + 1,
                    match e.kind {
                        EdgeKind::Standard => "standard",
                        EdgeKind::Extra => "extra",
                    }
                );
            }
        }
        out
    }

    /// Graphviz rendering; extra edges are dashed.
    pub fn to_dot(&self, graph: &Graph) -> String {
        let mut out = format!("digraph teg_agent{} {{\n  rankdir=LR;\n", self.agent);
        for (t, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "  subgraph layer{t} {{ rank=same;");
            for &v in layer {
                let _ = writeln!(out, "    \"{v}_{t}\" [label=\"{}^{t}\"];", graph.label(v));
            }
            out.push_str("  }\n");
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Standard => "solid",
                EdgeKind::Extra => "dashed",
            };
            let _ = writeln!(out, "  \"{}_{}\" -> \"{}_{}\" [style={style}];", e.from, e.time, e.to, e.time + 1);
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for TimeExpansionGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, layer) in self.layers.iter().enumerate() {
            writeln!(f, "{t}: {layer:?}")?;
        }
        Ok(())
    }
}

/// Builds the TEG of `agent` at depth `mu` with extra-cost budget `delta`.
pub fn build_teg(instance: &MapfInstance, agent: usize, mu: u32, delta: u32) -> Result<TimeExpansionGraph, TegError> {
    let a = instance.agent(agent);
    let from_start = bfs_distances(instance.graph(), a.start);
    let shortest = from_start.get(a.goal).ok_or(TegError::Unreachable { agent })?;
    let dist = AgentDistances { from_start, to_goal: bfs_distances(instance.graph(), a.goal), shortest };
    build_teg_with(instance.graph(), agent, a, &dist, mu, delta)
}

/// [`build_teg`] with precomputed distances.
pub fn build_teg_with(
    graph: &Graph,
    agent: usize,
    endpoints: Agent,
    dist: &AgentDistances,
    mu: u32,
    delta: u32,
) -> Result<TimeExpansionGraph, TegError> {
    let empty = TegError::Empty { agent, mu, delta };
    let n = graph.vertex_count();
    let shortest = dist.shortest;
    let budget = shortest + delta;
    if mu < shortest {
        return Err(empty);
    }

    // Cheapest goal-wait-free cost of reaching u at exactly time t is t,
    // unless the walk can park at the goal first, which costs
    // d(s,g) + d(g,u) once t allows it.
    let corridor = |u: VertexId, t: u32| -> bool {
        let (Some(ds), Some(dg)) = (dist.from_start.get(u), dist.to_goal.get(u)) else {
            return false;
        };
        if ds > t || dg > mu - t {
            return false;
        }
        let via_goal = shortest + dg;
        let prefix = if t >= via_goal { via_goal } else { t };
        prefix + dg <= budget
    };

    let layers = mu as usize + 1;
    let mut alive = vec![vec![false; n]; layers];
    if corridor(endpoints.start, 0) {
        alive[0][endpoints.start] = true;
    }
    for t in 0..mu as usize {
        let (cur, next) = alive.split_at_mut(t + 1);
        for u in (0..n).filter(|&u| cur[t][u]) {
            for v in std::iter::once(u).chain(graph.neighbors(u).iter().copied()) {
                if !next[0][v] && corridor(v, t as u32 + 1) {
                    next[0][v] = true;
                }
            }
        }
    }
    let last = mu as usize;
    for v in 0..n {
        if v != endpoints.goal {
            alive[last][v] = false;
        }
    }
    if !alive[last][endpoints.goal] {
        return Err(empty);
    }
    for t in (0..last).rev() {
        let (cur, next) = alive.split_at_mut(t + 1);
        for u in 0..n {
            if cur[t][u] && !(next[0][u] || graph.neighbors(u).iter().any(|&v| next[0][v])) {
                cur[t][u] = false;
            }
        }
    }
    if !alive[0][endpoints.start] {
        return Err(empty);
    }

    let mut edges = Vec::new();
    for t in 0..last {
        for u in (0..n).filter(|&u| alive[t][u]) {
            let mut targets: Vec<VertexId> =
                std::iter::once(u).chain(graph.neighbors(u).iter().copied()).filter(|&v| alive[t + 1][v]).collect();
            targets.sort_unstable();
            for v in targets {
                let goal_wait = u == endpoints.goal && v == endpoints.goal;
                let kind = if t as u32 >= shortest && !goal_wait { EdgeKind::Extra } else { EdgeKind::Standard };
                edges.push(TegEdge { time: t as u32, from: u, to: v, kind });
            }
        }
    }

    Ok(TimeExpansionGraph {
        agent,
        start: endpoints.start,
        goal: endpoints.goal,
        depth: mu,
        delta,
        shortest,
        layers: alive.into_iter().map(|layer| (0..n).filter(|&v| layer[v]).collect()).collect(),
        edges,
    })
}
