//! Problem model: graphs, MAPF instances, plans, conflict policies, file
//! formats, random instance generation and plan validation.

mod formats;
mod generate;
mod graph;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use formats::{
    parse_instance_json, parse_map, parse_plan_json, parse_scenario, plan_to_json, render_instance_json, render_map,
    render_scenario, FormatError, ScenarioEntry,
};
pub use generate::{generate_random_instance, GenerateError, GeneratorParams};
pub use graph::{Cell, Graph, GridLayout, VertexId};
pub use validate::{agent_costs, sum_of_costs, validate, CostError, Costs, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("vertex {vertex} out of range (graph has {vertex_count} vertices)")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("grid {width}x{height} needs {} cells, got {cells}", width * height)]
    GridShape { width: usize, height: usize, cells: usize },
    #[error("agents {first} and {second} share start vertex {vertex}")]
    DuplicateStart { first: usize, second: usize, vertex: VertexId },
    #[error("agents {first} and {second} share goal vertex {vertex}")]
    DuplicateGoal { first: usize, second: usize, vertex: VertexId },
}

/// Start and goal of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Agent {
    pub start: VertexId,
    pub goal: VertexId,
}

/// A MAPF instance: a graph plus an ordered list of agents. Agent ids are
/// indices into that list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapfInstance {
    graph: Graph,
    agents: Vec<Agent>,
}

impl MapfInstance {
    pub fn new(graph: Graph, agents: Vec<Agent>) -> Result<Self, InstanceError> {
        let n = graph.vertex_count();
        for a in &agents {
            for v in [a.start, a.goal] {
                if v >= n {
                    return Err(InstanceError::VertexOutOfRange { vertex: v, vertex_count: n });
                }
            }
        }
        for (i, a) in agents.iter().enumerate() {
            for (j, b) in agents.iter().enumerate().skip(i + 1) {
                if a.start == b.start {
                    return Err(InstanceError::DuplicateStart { first: i, second: j, vertex: a.start });
                }
                if a.goal == b.goal {
                    return Err(InstanceError::DuplicateGoal { first: i, second: j, vertex: a.goal });
                }
            }
        }
        Ok(MapfInstance { graph, agents })
    }

    /// Convenience constructor from `(start, goal)` pairs.
    pub fn from_pairs(
        graph: Graph,
        pairs: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, InstanceError> {
        let agents = pairs.into_iter().map(|(start, goal)| Agent { start, goal }).collect();
        MapfInstance::new(graph, agents)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> Agent {
        self.agents[i]
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn starts(&self) -> Vec<VertexId> {
        self.agents.iter().map(|a| a.start).collect()
    }

    pub fn goals(&self) -> Vec<VertexId> {
        self.agents.iter().map(|a| a.goal).collect()
    }

    /// Same instance with agents reordered: agent `i` of the result is agent
    /// `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> MapfInstance {
        MapfInstance { graph: self.graph.clone(), agents: order.iter().map(|&i| self.agents[i]).collect() }
    }

    /// Keeps only the first `k` agents.
    pub fn truncated(&self, k: usize) -> MapfInstance {
        MapfInstance { graph: self.graph.clone(), agents: self.agents[..k.min(self.agents.len())].to_vec() }
    }
}

/// Which inter-agent conflicts a plan must avoid. Vertex conflicts are
/// always forbidden; forbidding follow conflicts also forbids swaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    /// Only vertex conflicts.
    Vertex,
    /// Vertex and swap conflicts.
    #[default]
    Swap,
    /// Vertex, swap and follow conflicts.
    Follow,
}

impl ConflictPolicy {
    pub fn forbid_swap(self) -> bool {
        !matches!(self, ConflictPolicy::Vertex)
    }

    pub fn forbid_follow(self) -> bool {
        matches!(self, ConflictPolicy::Follow)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConflictPolicy::Vertex => "vertex",
            ConflictPolicy::Swap => "swap",
            ConflictPolicy::Follow => "follow",
        }
    }
}

impl fmt::Display for ConflictPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConflictPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vertex" => Ok(ConflictPolicy::Vertex),
            "swap" => Ok(ConflictPolicy::Swap),
            "follow" => Ok(ConflictPolicy::Follow),
            other => Err(format!("unknown conflict policy '{other}' (expected vertex, swap or follow)")),
        }
    }
}

/// How an individual agent's cost is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostSemantics {
    /// Time step after which the agent stays at its goal forever.
    ArrivalTime,
    /// Number of steps whose action is not a wait at the goal.
    GoalWaitFree,
}

/// A sequence of arrangements `[α0, α1, ..., αμ]`; `arrangements[t][i]` is
/// the vertex of agent `i` at time `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    arrangements: Vec<Vec<VertexId>>,
}

impl Plan {
    pub fn new(arrangements: Vec<Vec<VertexId>>) -> Self {
        Plan { arrangements }
    }

    /// Builds a plan from per-agent paths of equal length.
    pub fn from_paths(paths: &[Vec<VertexId>]) -> Self {
        let len = paths.first().map_or(0, Vec::len);
        assert!(paths.iter().all(|p| p.len() == len), "paths differ in length");
        Plan { arrangements: (0..len).map(|t| paths.iter().map(|p| p[t]).collect()).collect() }
    }

    pub fn arrangements(&self) -> &[Vec<VertexId>] {
        &self.arrangements
    }

    pub fn is_empty(&self) -> bool {
        self.arrangements.is_empty()
    }

    /// Number of time steps, i.e. `arrangements.len() - 1`.
    pub fn makespan(&self) -> usize {
        self.arrangements.len().saturating_sub(1)
    }

    pub fn agent_count(&self) -> usize {
        self.arrangements.first().map_or(0, Vec::len)
    }

    pub fn path(&self, agent: usize) -> Vec<VertexId> {
        self.arrangements.iter().map(|a| a[agent]).collect()
    }

    pub fn paths(&self) -> Vec<Vec<VertexId>> {
        (0..self.agent_count()).map(|i| self.path(i)).collect()
    }

    /// Reorders agents like [`MapfInstance::permuted`].
    pub fn permuted(&self, order: &[usize]) -> Plan {
        Plan { arrangements: self.arrangements.iter().map(|a| order.iter().map(|&i| a[i]).collect()).collect() }
    }

    /// Drops trailing arrangements identical to their predecessor.
    pub fn trimmed(&self) -> Plan {
        let mut arrangements = self.arrangements.clone();
        while arrangements.len() > 1 && arrangements[arrangements.len() - 1] == arrangements[arrangements.len() - 2] {
            arrangements.pop();
        }
        Plan { arrangements }
    }
}
