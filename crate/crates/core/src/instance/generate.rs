use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Agent, Graph, MapfInstance};

/// Walks tried per agent before giving up on distinct goals.
const GOAL_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("obstacle ratio {0} outside [0, 1)")]
    ObstacleRatio(f64),
    #[error("{agents} agents requested but only {passable} passable cells")]
    TooManyAgents { agents: usize, passable: usize },
    #[error("no distinct goal for agent {agent} after {GOAL_ATTEMPTS} random walks")]
    GoalsNotDistinct { agent: usize },
}

/// Random grid instance parameters: obstacles placed uniformly, starts
/// placed uniformly, each goal at the end of a random walk from its start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub width: usize,
    pub height: usize,
    pub obstacle_ratio: f64,
    pub agents: usize,
    pub walk_length: usize,
}

impl GeneratorParams {
    /// Number of blocked cells: `floor(ratio * cells)`.
    pub fn obstacle_count(&self) -> usize {
        let cells = (self.width * self.height) as f64;
        // the small offset keeps e.g. 0.29 * 100 from flooring to 28
        (self.obstacle_ratio * cells + 1e-9).floor() as usize
    }
}

pub fn generate_random_instance(params: &GeneratorParams, seed: u64) -> Result<MapfInstance, GenerateError> {
    if !(0.0..1.0).contains(&params.obstacle_ratio) {
        return Err(GenerateError::ObstacleRatio(params.obstacle_ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = params.width * params.height;
    let obstacles = params.obstacle_count();

    let mut blocked = vec![false; cells];
    for c in index::sample(&mut rng, cells, obstacles) {
        blocked[c] = true;
    }
    let graph = Graph::grid(params.width, params.height, blocked).expect("grid shape matches");

    let passable = graph.vertex_count();
    if params.agents > passable {
        return Err(GenerateError::TooManyAgents { agents: params.agents, passable });
    }
    let starts = index::sample(&mut rng, passable, params.agents).into_vec();

    let mut goals: Vec<usize> = Vec::with_capacity(params.agents);
    for (agent, &start) in starts.iter().enumerate() {
        let goal = (0..GOAL_ATTEMPTS)
            .map(|_| {
                let mut v = start;
                for _ in 0..params.walk_length {
                    if let Some(&next) = graph.neighbors(v).choose(&mut rng) {
                        v = next;
                    }
                }
                v
            })
            .find(|g| !goals.contains(g))
            .ok_or(GenerateError::GoalsNotDistinct { agent })?;
        goals.push(goal);
    }

    let agents = starts.into_iter().zip(goals).map(|(start, goal)| Agent { start, goal }).collect();
    Ok(MapfInstance::new(graph, agents).expect("starts and goals are distinct"))
}
