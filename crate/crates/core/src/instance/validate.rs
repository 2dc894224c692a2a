use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConflictPolicy, CostSemantics, MapfInstance, Plan, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Arrangement has the wrong number of agents or an unknown vertex.
    Malformed,
    StartMismatch,
    GoalMismatch,
    IllegalMove,
    VertexConflict,
    SwapConflict,
    FollowConflict,
}

/// One violation. For moves and swap/follow conflicts `time` is the step at
/// which the move starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub time: usize,
    pub kind: ViolationKind,
    pub agents: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Costs {
    pub arrival_time_soc: u64,
    pub goal_wait_free_soc: u64,
    pub makespan: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Present whenever the plan is well formed and ends at the goals.
    pub costs: Option<Costs>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostError {
    #[error("agent {agent} does not end at its goal")]
    NotGoalAnchored { agent: usize },
    #[error("plan is empty or does not match the instance's agents")]
    Malformed,
}

fn well_formed(instance: &MapfInstance, plan: &Plan) -> bool {
    let k = instance.agent_count();
    let n = instance.graph().vertex_count();
    !plan.is_empty() && plan.arrangements().iter().all(|a| a.len() == k && a.iter().all(|&v| v < n))
}

/// Per-agent cost under `semantics`.
pub fn agent_costs(plan: &Plan, instance: &MapfInstance, semantics: CostSemantics) -> Result<Vec<u64>, CostError> {
    if !well_formed(instance, plan) {
        return Err(CostError::Malformed);
    }
    let steps = plan.arrangements();
    let last = steps.len() - 1;
    (0..instance.agent_count())
        .map(|i| {
            let goal = instance.agent(i).goal;
            if steps[last][i] != goal {
                return Err(CostError::NotGoalAnchored { agent: i });
            }
            Ok(match semantics {
                CostSemantics::ArrivalTime => steps.iter().rposition(|a| a[i] != goal).map_or(0, |t| t as u64 + 1),
                CostSemantics::GoalWaitFree => {
                    steps.windows(2).filter(|w| !(w[0][i] == goal && w[1][i] == goal)).count() as u64
                }
            })
        })
        .collect()
}

pub fn sum_of_costs(plan: &Plan, instance: &MapfInstance, semantics: CostSemantics) -> Result<u64, CostError> {
    Ok(agent_costs(plan, instance, semantics)?.into_iter().sum())
}

/// Checks anchoring, move legality and conflicts under `policy`, and reports
/// both cost semantics.
pub fn validate(instance: &MapfInstance, plan: &Plan, policy: ConflictPolicy) -> ValidationReport {
    let mut violations = Vec::new();
    if !well_formed(instance, plan) {
        violations.push(Violation { time: 0, kind: ViolationKind::Malformed, agents: Vec::new() });
        return ValidationReport { valid: false, violations, costs: None };
    }
    let graph = instance.graph();
    let steps = plan.arrangements();
    let k = instance.agent_count();
    let last = steps.len() - 1;

    for (i, a) in instance.agents().iter().enumerate() {
        if steps[0][i] != a.start {
            violations.push(Violation { time: 0, kind: ViolationKind::StartMismatch, agents: vec![i] });
        }
    }

    for (t, arrangement) in steps.iter().enumerate() {
        for i in 0..k {
            for j in i + 1..k {
                if arrangement[i] == arrangement[j] {
                    violations.push(Violation { time: t, kind: ViolationKind::VertexConflict, agents: vec![i, j] });
                }
            }
        }
        if t == last {
            break;
        }
        let next = &steps[t + 1];
        for i in 0..k {
            let (u, v) = (arrangement[i], next[i]);
            if u != v && !graph.has_edge(u, v) {
                violations.push(Violation { time: t, kind: ViolationKind::IllegalMove, agents: vec![i] });
            }
        }
        for i in 0..k {
            let (u, v): (VertexId, VertexId) = (arrangement[i], next[i]);
            if u == v {
                continue;
            }
            for j in 0..k {
                if i == j || arrangement[j] != v {
                    continue;
                }
                let swap = next[j] == u;
                if swap && policy.forbid_swap() {
                    if i < j {
                        violations.push(Violation { time: t, kind: ViolationKind::SwapConflict, agents: vec![i, j] });
                    }
                } else if !swap && policy.forbid_follow() {
                    violations.push(Violation { time: t, kind: ViolationKind::FollowConflict, agents: vec![i, j] });
                }
            }
        }
    }

    for (i, a) in instance.agents().iter().enumerate() {
        if steps[last][i] != a.goal {
            violations.push(Violation { time: last, kind: ViolationKind::GoalMismatch, agents: vec![i] });
        }
    }

    let costs = match (
        sum_of_costs(plan, instance, CostSemantics::ArrivalTime),
        sum_of_costs(plan, instance, CostSemantics::GoalWaitFree),
    ) {
        (Ok(arrival), Ok(gwf)) => {
            Some(Costs { arrival_time_soc: arrival, goal_wait_free_soc: gwf, makespan: plan.makespan() })
        }
        _ => None,
    };
    ValidationReport { valid: violations.is_empty(), violations, costs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Graph;

    fn line3() -> MapfInstance {
        MapfInstance::from_pairs(Graph::path(3), [(0, 2)]).unwrap()
    }

    #[test]
    fn line3_plan_is_valid() {
        let report = validate(&line3(), &Plan::from_paths(&[vec![0, 1, 2]]), ConflictPolicy::Swap);
        assert!(report.valid, "{report:?}");
        let costs = report.costs.unwrap();
        assert_eq!((costs.arrival_time_soc, costs.goal_wait_free_soc, costs.makespan), (2, 2, 2));
    }

    #[test]
    fn swap_detected_only_when_forbidden() {
        let inst = MapfInstance::from_pairs(Graph::path(2), [(0, 1), (1, 0)]).unwrap();
        let plan = Plan::from_paths(&[vec![0, 1], vec![1, 0]]);
        let report = validate(&inst, &plan, ConflictPolicy::Swap);
        assert_eq!(
            report.violations,
            vec![Violation { time: 0, kind: ViolationKind::SwapConflict, agents: vec![0, 1] }]
        );
        assert!(validate(&inst, &plan, ConflictPolicy::Vertex).valid);
        let follow = validate(&inst, &plan, ConflictPolicy::Follow);
        assert_eq!(follow.violations.len(), 1);
        assert_eq!(follow.violations[0].kind, ViolationKind::SwapConflict);
    }

    #[test]
    fn follow_conflict() {
        // agent 0 moves 0->1 while agent 1 leaves 1->2
        let inst = MapfInstance::from_pairs(Graph::path(3), [(0, 1), (1, 2)]).unwrap();
        let plan = Plan::from_paths(&[vec![0, 1], vec![1, 2]]);
        assert!(validate(&inst, &plan, ConflictPolicy::Swap).valid);
        let report = validate(&inst, &plan, ConflictPolicy::Follow);
        assert_eq!(report.violations[0].kind, ViolationKind::FollowConflict);
        assert_eq!(report.violations[0].agents, vec![0, 1]);
    }

    #[test]
    fn anchoring_and_moves() {
        let inst = line3();
        let report = validate(&inst, &Plan::from_paths(&[vec![0, 1]]), ConflictPolicy::Swap);
        assert_eq!(report.violations[0].kind, ViolationKind::GoalMismatch);
        assert!(report.costs.is_none());

        let report = validate(&inst, &Plan::from_paths(&[vec![1, 2]]), ConflictPolicy::Swap);
        assert_eq!(report.violations[0].kind, ViolationKind::StartMismatch);

        let report = validate(&inst, &Plan::from_paths(&[vec![0, 2]]), ConflictPolicy::Swap);
        assert_eq!(report.violations, vec![Violation { time: 0, kind: ViolationKind::IllegalMove, agents: vec![0] }]);

        let report = validate(&inst, &Plan::new(vec![vec![0, 1]]), ConflictPolicy::Swap);
        assert_eq!(report.violations[0].kind, ViolationKind::Malformed);
    }

    #[test]
    fn vertex_conflict_time() {
        let inst = MapfInstance::from_pairs(Graph::path(3), [(0, 2), (2, 0)]).unwrap();
        let plan = Plan::from_paths(&[vec![0, 1, 2], vec![2, 1, 0]]);
        let report = validate(&inst, &plan, ConflictPolicy::Vertex);
        assert_eq!(
            report.violations,
            vec![Violation { time: 1, kind: ViolationKind::VertexConflict, agents: vec![0, 1] }]
        );
    }

    #[test]
    fn cost_semantics() {
        // plan [g, g, x, g]: wait at goal, leave, return
        let inst = MapfInstance::from_pairs(Graph::path(2), [(0, 0)]).unwrap();
        let plan = Plan::from_paths(&[vec![0, 0, 1, 0]]);
        assert_eq!(sum_of_costs(&plan, &inst, CostSemantics::ArrivalTime), Ok(3));
        assert_eq!(sum_of_costs(&plan, &inst, CostSemantics::GoalWaitFree), Ok(2));

        let idle = Plan::from_paths(&[vec![0, 0, 0]]);
        assert_eq!(sum_of_costs(&idle, &inst, CostSemantics::ArrivalTime), Ok(0));
        assert_eq!(sum_of_costs(&idle, &inst, CostSemantics::GoalWaitFree), Ok(0));

        let line = line3();
        let plan = Plan::from_paths(&[vec![0, 1, 2]]);
        assert_eq!(sum_of_costs(&plan, &line, CostSemantics::ArrivalTime), Ok(2));
        assert_eq!(sum_of_costs(&plan, &line, CostSemantics::GoalWaitFree), Ok(2));
        assert_eq!(
            sum_of_costs(&Plan::from_paths(&[vec![0, 1]]), &line, CostSemantics::ArrivalTime),
            Err(CostError::NotGoalAnchored { agent: 0 })
        );
    }
}
