//! MAPF to CNF.
//!
//! Clause families, per agent `i` with TEG `T_i`:
//!
//! * C1 anchoring: `V(i, start, 0)` and `V(i, goal, μ)`.
//! * C2 flow: a true vertex below the last layer takes exactly one outgoing
//!   edge; an edge implies both of its endpoints.
//! * C3 at most one vertex per layer.
//! * C4 vertex conflicts between agents.
//! * C5 swap conflicts (policy), C6 follow conflicts (policy).
//! * C7 at most `λ` extra edges over all agents (sequential counter).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sequential_counter, CnfFormula, Lit, Model, VarMap, VarTag};
use crate::instance::{ConflictPolicy, MapfInstance, Plan, VertexId};
use crate::teg::{build_teg_with, DistanceTable, EdgeKind, TegError, TimeExpansionGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeParams {
    /// TEG depth (makespan).
    pub mu: u32,
    /// Extra-cost budget for the per-agent TEG corridors.
    pub delta: u32,
    /// Bound on the number of extra edges; `None` drops the constraint.
    pub cardinality: Option<u32>,
    pub policy: ConflictPolicy,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingStats {
    pub variables: u32,
    pub clauses: usize,
    pub literals: usize,
    pub vertex_vars: u32,
    pub edge_vars: u32,
    /// Size of the counted set (extra-edge variables).
    pub counted_literals: usize,
    /// Bound actually encoded; `None` when absent or vacuous.
    pub cardinality: Option<u32>,
    pub counter_aux: u32,
    pub counter_clauses: usize,
}

#[derive(Debug, Clone)]
pub struct EncodedFormula {
    pub formula: CnfFormula,
    pub varmap: VarMap,
    pub tegs: Vec<TimeExpansionGraph>,
    pub stats: EncodingStats,
    pub mu: u32,
}

#[derive(Debug, Clone)]
pub enum Encoding {
    Formula(Box<EncodedFormula>),
    /// Some agent's TEG is empty, so the budget admits no plan.
    TriviallyUnsat(TegError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("agent {agent} has no true vertex variable at time {time}")]
    MissingVertex { agent: usize, time: u32 },
    #[error("agent {agent} has several true vertex variables at time {time}")]
    MultipleVertices { agent: usize, time: u32 },
    #[error("model has {model} variables, formula has {expected}")]
    ModelSize { model: u32, expected: u32 },
}

pub fn encode(instance: &MapfInstance, params: &EncodeParams) -> Result<Encoding, TegError> {
    let table = DistanceTable::compute(instance)?;
    Ok(encode_with(instance, &table, params))
}

/// Per-agent variable lookup.
struct AgentVars {
    /// `(time, vertex) -> var`
    vertex: BTreeMap<(u32, VertexId), u32>,
    /// `(time, from, to) -> (var, kind)`
    edge: BTreeMap<(u32, VertexId, VertexId), (u32, EdgeKind)>,
}

pub fn encode_with(instance: &MapfInstance, table: &DistanceTable, params: &EncodeParams) -> Encoding {
    let graph = instance.graph();
    let mut tegs = Vec::with_capacity(instance.agent_count());
    for (i, &a) in instance.agents().iter().enumerate() {
        match build_teg_with(graph, i, a, table.agent(i), params.mu, params.delta) {
            Ok(teg) => tegs.push(teg),
            Err(e) => return Encoding::TriviallyUnsat(e),
        }
    }

    let mut varmap = VarMap::new();
    let mut agents = Vec::with_capacity(tegs.len());
    let mut stats = EncodingStats::default();
    for (i, teg) in tegs.iter().enumerate() {
        let mut vars = AgentVars { vertex: BTreeMap::new(), edge: BTreeMap::new() };
        let mut edges = teg.edges().iter().peekable();
        for t in 0..=params.mu {
            for &v in teg.layer(t) {
                let var = varmap.alloc(VarTag::Vertex { agent: i, vertex: v, time: t });
                vars.vertex.insert((t, v), var);
                stats.vertex_vars += 1;
            }
            while let Some(e) = edges.next_if(|e| e.time == t) {
                let var = varmap.alloc(VarTag::Edge { agent: i, from: e.from, time: t, to: e.to });
                vars.edge.insert((t, e.from, e.to), (var, e.kind));
                stats.edge_vars += 1;
            }
        }
        agents.push(vars);
    }

    let mut formula = CnfFormula::new(varmap.len());
    let lit = |v: u32| v as Lit;

    for (i, (teg, vars)) in tegs.iter().zip(&agents).enumerate() {
        let a = instance.agent(i);
        // C1
        formula.add_clause(vec![lit(vars.vertex[&(0, a.start)])]);
        formula.add_clause(vec![lit(vars.vertex[&(params.mu, a.goal)])]);
        // C2
        for t in 0..params.mu {
            for &u in teg.layer(t) {
                let v_ut = lit(vars.vertex[&(t, u)]);
                let outs: Vec<Lit> = teg.out_edges(u, t).iter().map(|e| lit(vars.edge[&(t, e.from, e.to)].0)).collect();
                let mut alo = vec![-v_ut];
                alo.extend(&outs);
                formula.add_clause(alo);
                for (x, &ea) in outs.iter().enumerate() {
                    for &eb in &outs[x + 1..] {
                        formula.add_clause(vec![-ea, -eb]);
                    }
                }
                for e in teg.out_edges(u, t) {
                    let e_var = lit(vars.edge[&(t, e.from, e.to)].0);
                    formula.add_clause(vec![-e_var, v_ut]);
                    formula.add_clause(vec![-e_var, lit(vars.vertex[&(t + 1, e.to)])]);
                }
            }
        }
        // C3
        for t in 0..=params.mu {
            let layer: Vec<Lit> = teg.layer(t).iter().map(|&v| lit(vars.vertex[&(t, v)])).collect();
            for (x, &p) in layer.iter().enumerate() {
                for &q in &layer[x + 1..] {
                    formula.add_clause(vec![-p, -q]);
                }
            }
        }
    }

    // C4
    let mut occupancy: BTreeMap<(u32, VertexId), Vec<Lit>> = BTreeMap::new();
    for vars in &agents {
        for (&key, &var) in &vars.vertex {
            occupancy.entry(key).or_default().push(lit(var));
        }
    }
    for occupants in occupancy.values() {
        for (x, &p) in occupants.iter().enumerate() {
            for &q in &occupants[x + 1..] {
                formula.add_clause(vec![-p, -q]);
            }
        }
    }

    // C5
    if params.policy.forbid_swap() {
        for (i, vi) in agents.iter().enumerate() {
            for vj in &agents[i + 1..] {
                for (&(t, u, v), &(ei, _)) in &vi.edge {
                    if u == v {
                        continue;
                    }
                    if let Some(&(ej, _)) = vj.edge.get(&(t, v, u)) {
                        formula.add_clause(vec![-lit(ei), -lit(ej)]);
                    }
                }
            }
        }
    }

    // C6
    if params.policy.forbid_follow() {
        for (i, vi) in agents.iter().enumerate() {
            for (j, vj) in agents.iter().enumerate() {
                if i == j {
                    continue;
                }
                for (&(t, u, v), &(ei, _)) in &vi.edge {
                    if u == v {
                        continue;
                    }
                    if let Some(&occ) = vj.vertex.get(&(t, v)) {
                        formula.add_clause(vec![-lit(ei), -lit(occ)]);
                    }
                }
            }
        }
    }

    // C7, counted literals in variable order
    let mut counted: Vec<(u32, Lit)> = agents
        .iter()
        .flat_map(|vars| {
            vars.edge.values().filter(|(_, kind)| *kind == EdgeKind::Extra).map(|&(var, _)| (var, var as Lit))
        })
        .collect();
    counted.sort_unstable();
    let counted: Vec<Lit> = counted.into_iter().map(|(_, l)| l).collect();
    stats.counted_literals = counted.len();
    if let Some(bound) = params.cardinality {
        if (bound as usize) < counted.len() {
            let first_aux = varmap.len() + 1;
            let enc = sequential_counter(&counted, bound as usize, first_aux);
            for &(index, count) in &enc.aux {
                varmap.alloc(VarTag::CounterAux { index, count });
            }
            formula.new_vars(enc.aux_count());
            stats.cardinality = Some(bound);
            stats.counter_aux = enc.aux_count();
            stats.counter_clauses = enc.clauses.len();
            for c in enc.clauses {
                formula.add_clause(c);
            }
        }
    }

    stats.variables = formula.num_vars();
    stats.clauses = formula.clauses().len();
    stats.literals = formula.literal_count();
    Encoding::Formula(Box::new(EncodedFormula { formula, varmap, tegs, stats, mu: params.mu }))
}

/// Reads the plan off a model of an encoded formula.
pub fn decode(model: &Model, varmap: &VarMap, instance: &MapfInstance, mu: u32) -> Result<Plan, DecodeError> {
    if model.num_vars() < varmap.len() {
        return Err(DecodeError::ModelSize { model: model.num_vars(), expected: varmap.len() });
    }
    let k = instance.agent_count();
    let mut positions: Vec<Vec<Option<VertexId>>> = vec![vec![None; k]; mu as usize + 1];
    for (var, tag) in varmap.iter() {
        if let VarTag::Vertex { agent, vertex, time } = *tag {
            if model.value(var) {
                let slot = &mut positions[time as usize][agent];
                if slot.is_some() {
                    return Err(DecodeError::MultipleVertices { agent, time });
                }
                *slot = Some(vertex);
            }
        }
    }
    let arrangements = positions
        .into_iter()
        .enumerate()
        .map(|(t, row)| {
            row.into_iter()
                .enumerate()
                .map(|(agent, v)| v.ok_or(DecodeError::MissingVertex { agent, time: t as u32 }))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan::new(arrangements))
}
