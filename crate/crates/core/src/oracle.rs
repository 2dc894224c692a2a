//! Brute-force ground truth over the joint state space.
//!
//! Shares nothing with the TEG or the encoder: moves, conflicts and costs
//! are re-derived here from the graph alone. Only usable at desk scale.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Deadline;
use crate::instance::{ConflictPolicy, CostSemantics, Graph, MapfInstance, Plan, VertexId};

const BITS: u32 = 12;
const MASK: u128 = (1 << BITS) - 1;
/// Hard limits of the state packing.
pub const MAX_AGENTS: usize = 8;
pub const MAX_VERTICES: usize = 1 << BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_agents: usize,
    pub max_vertices: usize,
    /// Distinct joint states the search may store.
    pub max_states: usize,
    #[serde(default, with = "crate::sat::opt_duration_ms")]
    pub time_limit: Option<Duration>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_agents: 4, max_vertices: 64, max_states: 4_000_000, time_limit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum OracleOutcome {
    Optimal { cost: u64, plan: Plan },
    Unsolvable,
    ResourceExceeded { reason: String },
}

impl OracleOutcome {
    pub fn cost(&self) -> Option<u64> {
        match self {
            OracleOutcome::Optimal { cost, .. } => Some(*cost),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solvability {
    Solvable,
    Unsolvable,
    ResourceExceeded,
}

fn pack_pos(pos: &[VertexId]) -> u128 {
    pos.iter().enumerate().fold(0, |acc, (i, &v)| acc | (v as u128) << (BITS * i as u32))
}

struct Search<'a> {
    graph: &'a Graph,
    policy: ConflictPolicy,
    k: usize,
    goals: Vec<VertexId>,
    limits: OracleLimits,
    deadline: Deadline,
}

fn key(pos: &[VertexId], settled: u8) -> u128 {
    pack_pos(pos) | u128::from(settled) << (BITS as usize * MAX_AGENTS)
}

fn unpack(key: u128, k: usize) -> (Vec<VertexId>, u8) {
    let pos = (0..k).map(|i| ((key >> (BITS * i as u32)) & MASK) as VertexId).collect();
    let settled = (key >> (BITS as usize * MAX_AGENTS)) as u8;
    (pos, settled)
}

impl<'a> Search<'a> {
    fn new(instance: &'a MapfInstance, policy: ConflictPolicy, limits: OracleLimits) -> Result<Self, String> {
        let k = instance.agent_count();
        let n = instance.graph().vertex_count();
        if k > limits.max_agents.min(MAX_AGENTS) {
            return Err(format!("{k} agents exceed the cap of {}", limits.max_agents.min(MAX_AGENTS)));
        }
        if n > limits.max_vertices.min(MAX_VERTICES) {
            return Err(format!("{n} vertices exceed the cap of {}", limits.max_vertices.min(MAX_VERTICES)));
        }
        Ok(Search {
            graph: instance.graph(),
            policy,
            k,
            goals: instance.goals(),
            limits,
            deadline: Deadline::new(limits.time_limit),
        })
    }

    /// Every conflict-free next arrangement. `frozen` agents must stay put.
    fn successors(&self, pos: &[VertexId], frozen: u8, out: &mut Vec<Vec<VertexId>>) {
        out.clear();
        let mut next = Vec::with_capacity(self.k);
        self.extend(pos, frozen, &mut next, out);
    }

    fn extend(&self, pos: &[VertexId], frozen: u8, next: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
        let i = next.len();
        if i == self.k {
            out.push(next.clone());
            return;
        }
        let u = pos[i];
        let stay = std::iter::once(u);
        let moves: Box<dyn Iterator<Item = VertexId>> = if frozen >> i & 1 == 1 {
            Box::new(stay)
        } else {
            Box::new(stay.chain(self.graph.neighbors(u).iter().copied()))
        };
        for v in moves {
            if self.compatible(pos, next, i, v) {
                next.push(v);
                self.extend(pos, frozen, next, out);
                next.pop();
            }
        }
    }

    /// Can agent `i` go `pos[i] -> v` alongside the moves already in `next`?
    fn compatible(&self, pos: &[VertexId], next: &[VertexId], i: usize, v: VertexId) -> bool {
        let u = pos[i];
        for (j, &w) in next.iter().enumerate() {
            if w == v {
                return false;
            }
            if self.policy.forbid_swap() && u != v && w == u && pos[j] == v {
                return false;
            }
        }
        if self.policy.forbid_follow() {
            // entering a vertex held by another agent; checked from the
            // mover's side, so every pair is covered once both are placed
            if u != v && (0..self.k).any(|j| j != i && pos[j] == v) {
                return false;
            }
        }
        true
    }

    fn over_budget(&self, stored: usize, expansions: u64) -> Option<String> {
        if stored > self.limits.max_states {
            return Some(format!("more than {} joint states", self.limits.max_states));
        }
        if expansions.is_multiple_of(256) && self.deadline.expired() {
            return Some("time limit reached".to_string());
        }
        None
    }
}

/// Exact optimal sum of costs by uniform-cost search over joint states.
pub fn optimal_sum_of_costs(
    instance: &MapfInstance,
    policy: ConflictPolicy,
    semantics: CostSemantics,
    limits: &OracleLimits,
) -> OracleOutcome {
    let search = match Search::new(instance, policy, *limits) {
        Ok(s) => s,
        Err(reason) => return OracleOutcome::ResourceExceeded { reason },
    };
    let k = search.k;
    let all: u8 = if k == 0 { 0 } else { (((1u16 << k) - 1) & 0xff) as u8 };
    let arrival = semantics == CostSemantics::ArrivalTime;

    let start = key(&instance.starts(), 0);
    let mut best: HashMap<u128, u64> = HashMap::from([(start, 0)]);
    let mut parent: HashMap<u128, u128> = HashMap::new();
    let mut queue = BinaryHeap::from([Reverse((0u64, start))]);
    let mut buf = Vec::new();
    let mut expansions = 0u64;

    while let Some(Reverse((cost, state))) = queue.pop() {
        if best.get(&state).is_some_and(|&c| c < cost) {
            continue;
        }
        expansions += 1;
        if let Some(reason) = search.over_budget(best.len(), expansions) {
            return OracleOutcome::ResourceExceeded { reason };
        }
        let (pos, settled) = unpack(state, k);
        let done = if arrival { settled == all } else { pos == search.goals };
        if done {
            return OracleOutcome::Optimal { cost, plan: rebuild(state, &parent, k) };
        }

        let mut relax = |next: u128, c: u64, queue: &mut BinaryHeap<Reverse<(u64, u128)>>| {
            if best.get(&next).is_none_or(|&old| c < old) {
                best.insert(next, c);
                parent.insert(next, state);
                queue.push(Reverse((c, next)));
            }
        };

        if arrival {
            for i in 0..k {
                if settled >> i & 1 == 0 && pos[i] == search.goals[i] {
                    relax(key(&pos, settled | 1 << i), cost, &mut queue);
                }
            }
            let step = u64::from((all & !settled).count_ones());
            search.successors(&pos, settled, &mut buf);
            for next in &buf {
                relax(key(next, settled), cost + step, &mut queue);
            }
        } else {
            search.successors(&pos, 0, &mut buf);
            for next in &buf {
                let step =
                    (0..k).filter(|&i| !(pos[i] == search.goals[i] && next[i] == search.goals[i])).count() as u64;
                relax(key(next, 0), cost + step, &mut queue);
            }
        }
    }
    OracleOutcome::Unsolvable
}

/// Walks parents back to the start, dropping settle-only transitions.
fn rebuild(mut state: u128, parent: &HashMap<u128, u128>, k: usize) -> Plan {
    let positions_mask = (1u128 << (BITS as usize * MAX_AGENTS)) - 1;
    let mut steps = vec![unpack(state, k).0];
    while let Some(&prev) = parent.get(&state) {
        if prev & positions_mask != state & positions_mask || unpack(prev, k).1 == unpack(state, k).1 {
            steps.push(unpack(prev, k).0);
        }
        state = prev;
    }
    steps.reverse();
    Plan::new(steps)
}

/// Minimum goal-wait-free sum of costs over plans of makespan at most `mu`,
/// by dynamic programming over time layers. `Ok(None)` when no such plan
/// exists; `Err` when a cap is hit.
pub fn min_cost_within_makespan(
    instance: &MapfInstance,
    policy: ConflictPolicy,
    mu: u32,
    limits: &OracleLimits,
) -> Result<Option<u64>, String> {
    let search = Search::new(instance, policy, *limits)?;
    let k = search.k;
    let mut layer: HashMap<u128, u64> = HashMap::from([(key(&instance.starts(), 0), 0)]);
    let mut buf = Vec::new();
    let mut expansions = 0u64;
    for _ in 0..mu {
        let mut next_layer: HashMap<u128, u64> = HashMap::new();
        for (&state, &cost) in &layer {
            expansions += 1;
            if let Some(reason) = search.over_budget(layer.len() + next_layer.len(), expansions) {
                return Err(reason);
            }
            let (pos, _) = unpack(state, k);
            search.successors(&pos, 0, &mut buf);
            for next in &buf {
                let step =
                    (0..k).filter(|&i| !(pos[i] == search.goals[i] && next[i] == search.goals[i])).count() as u64;
                let e = next_layer.entry(key(next, 0)).or_insert(u64::MAX);
                *e = (*e).min(cost + step);
            }
        }
        layer = next_layer;
    }
    Ok(layer.get(&key(&search.goals, 0)).copied())
}

/// Whether the goal arrangement is reachable at all.
pub fn is_solvable(instance: &MapfInstance, policy: ConflictPolicy, limits: &OracleLimits) -> Solvability {
    let Ok(search) = Search::new(instance, policy, *limits) else {
        return Solvability::ResourceExceeded;
    };
    let k = search.k;
    let start = key(&instance.starts(), 0);
    let goal = key(&search.goals, 0);
    let mut seen = std::collections::HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut buf = Vec::new();
    let mut expansions = 0u64;
    while let Some(state) = queue.pop_front() {
        if state == goal {
            return Solvability::Solvable;
        }
        expansions += 1;
        if search.over_budget(seen.len(), expansions).is_some() {
            return Solvability::ResourceExceeded;
        }
        search.successors(&unpack(state, k).0, 0, &mut buf);
        for next in &buf {
            let nk = key(next, 0);
            if seen.insert(nk) {
                queue.push_back(nk);
            }
        }
    }
    Solvability::Unsolvable
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate;

    fn line3() -> MapfInstance {
        MapfInstance::from_pairs(Graph::path(3), [(0, 2)]).unwrap()
    }

    fn swap2x2() -> MapfInstance {
        // 0 1
        // 2 3
        MapfInstance::from_pairs(Graph::open_grid(2, 2), [(0, 3), (3, 0)]).unwrap()
    }

    fn optimal(inst: &MapfInstance, policy: ConflictPolicy, sem: CostSemantics) -> OracleOutcome {
        optimal_sum_of_costs(inst, policy, sem, &OracleLimits::default())
    }

    #[test]
    fn small_optima() {
        for sem in [CostSemantics::GoalWaitFree, CostSemantics::ArrivalTime] {
            assert_eq!(optimal(&line3(), ConflictPolicy::Swap, sem).cost(), Some(2));
            assert_eq!(optimal(&swap2x2(), ConflictPolicy::Swap, sem).cost(), Some(4));
        }
    }

    #[test]
    fn two_vertex_swap_is_unsolvable() {
        let inst = MapfInstance::from_pairs(Graph::path(2), [(0, 1), (1, 0)]).unwrap();
        assert_eq!(optimal(&inst, ConflictPolicy::Swap, CostSemantics::GoalWaitFree), OracleOutcome::Unsolvable);
        assert_eq!(is_solvable(&inst, ConflictPolicy::Swap, &OracleLimits::default()), Solvability::Unsolvable);
        // without the swap rule the exchange is a legal move
        assert_eq!(is_solvable(&inst, ConflictPolicy::Vertex, &OracleLimits::default()), Solvability::Solvable);
        assert_eq!(is_solvable(&swap2x2(), ConflictPolicy::Swap, &OracleLimits::default()), Solvability::Solvable);
        assert_eq!(is_solvable(&line3(), ConflictPolicy::Swap, &OracleLimits::default()), Solvability::Solvable);
    }

    #[test]
    fn pass_through_plans_validate() {
        // agent 0 sits on its goal at 1, which agent 1 must cross from 0 to 2;
        // a side pocket 3 hangs off vertex 1
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let inst = MapfInstance::from_pairs(g, [(1, 1), (0, 2)]).unwrap();
        let gwf = optimal(&inst, ConflictPolicy::Swap, CostSemantics::GoalWaitFree);
        let at = optimal(&inst, ConflictPolicy::Swap, CostSemantics::ArrivalTime);
        // agent 0 steps aside and back (2), agent 1 walks 2 steps
        assert_eq!(gwf.cost(), Some(4));
        // agent 0 is back on its goal at t=2 at the earliest, agent 1 at t=2
        assert_eq!(at.cost(), Some(4));
        for out in [gwf, at] {
            let OracleOutcome::Optimal { plan, cost } = out else { panic!() };
            let report = validate(&inst, &plan, ConflictPolicy::Swap);
            assert!(report.valid, "{:?}", report.violations);
            let costs = report.costs.unwrap();
            assert!(cost == costs.goal_wait_free_soc || cost == costs.arrival_time_soc);
        }
    }

    #[test]
    fn follow_policy_costs_more_on_a_cycle() {
        // three agents rotating on a 3-cycle need to follow each other
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let inst = MapfInstance::from_pairs(g, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(optimal(&inst, ConflictPolicy::Swap, CostSemantics::GoalWaitFree).cost(), Some(3));
        assert_eq!(optimal(&inst, ConflictPolicy::Follow, CostSemantics::GoalWaitFree), OracleOutcome::Unsolvable);
    }

    #[test]
    fn makespan_bounded_minimum() {
        let inst = swap2x2();
        let lim = OracleLimits::default();
        assert_eq!(min_cost_within_makespan(&inst, ConflictPolicy::Swap, 1, &lim), Ok(None));
        assert_eq!(min_cost_within_makespan(&inst, ConflictPolicy::Swap, 2, &lim), Ok(Some(4)));
        assert_eq!(min_cost_within_makespan(&inst, ConflictPolicy::Swap, 5, &lim), Ok(Some(4)));
    }

    #[test]
    fn caps_are_reported() {
        let lim = OracleLimits { max_agents: 1, ..OracleLimits::default() };
        assert!(matches!(
            optimal_sum_of_costs(&swap2x2(), ConflictPolicy::Swap, CostSemantics::GoalWaitFree, &lim),
            OracleOutcome::ResourceExceeded { .. }
        ));
        let lim = OracleLimits { max_states: 3, ..OracleLimits::default() };
        assert!(matches!(
            optimal_sum_of_costs(&swap2x2(), ConflictPolicy::Swap, CostSemantics::GoalWaitFree, &lim),
            OracleOutcome::ResourceExceeded { .. }
        ));
        assert_eq!(is_solvable(&swap2x2(), ConflictPolicy::Swap, &lim), Solvability::ResourceExceeded);
    }
}
