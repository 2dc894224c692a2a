//! CNF formulas, the variable map tying variables to TEG vertices/edges, the
//! sequential-counter cardinality encoding, and DIMACS I/O.

mod counter;
mod dimacs;
mod encode;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use counter::{sequential_counter, CounterEncoding};
pub use dimacs::{from_dimacs, to_dimacs, DimacsError};
pub use encode::{decode, encode, encode_with, DecodeError, EncodeParams, EncodedFormula, Encoding, EncodingStats};

use crate::instance::VertexId;

/// A DIMACS-style literal: `v` or `-v` for variable `v >= 1`.
pub type Lit = i32;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
}

impl CnfFormula {
    pub fn new(num_vars: u32) -> Self {
        CnfFormula { num_vars, clauses: Vec::new() }
    }

    pub fn from_clauses(num_vars: u32, clauses: Vec<Vec<Lit>>) -> Self {
        let mut f = CnfFormula::new(num_vars);
        for c in clauses {
            f.add_clause(c);
        }
        f
    }

    /// Panics if a literal is zero or names an unallocated variable.
    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        for &l in &clause {
            assert!(l != 0 && l.unsigned_abs() <= self.num_vars, "literal {l} outside 1..={}", self.num_vars);
        }
        self.clauses.push(clause);
    }

    /// Grows the variable range; returns the first new variable.
    pub fn new_vars(&mut self, count: u32) -> u32 {
        let first = self.num_vars + 1;
        self.num_vars += count;
        first
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Vec::is_empty)
    }

    /// True iff every clause has a true literal under `model`.
    pub fn is_satisfied_by(&self, model: &Model) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| model.lit_value(l)))
    }
}

/// A total assignment, indexed by 1-based variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn new(values: Vec<bool>) -> Self {
        Model(values)
    }

    pub fn all_false(num_vars: u32) -> Self {
        Model(vec![false; num_vars as usize])
    }

    pub fn num_vars(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn value(&self, var: u32) -> bool {
        self.0[var as usize - 1]
    }

    pub fn set(&mut self, var: u32, value: bool) {
        self.0[var as usize - 1] = value;
    }

    /// Variables outside the model read as false.
    pub fn lit_value(&self, lit: Lit) -> bool {
        let v = self.0.get(lit.unsigned_abs() as usize - 1).copied().unwrap_or(false);
        if lit > 0 {
            v
        } else {
            !v
        }
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }
}

/// What a propositional variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VarTag {
    /// Agent is at `vertex` at `time`.
    Vertex { agent: usize, vertex: VertexId, time: u32 },
    /// Agent traverses `from^time -> to^(time+1)`.
    Edge { agent: usize, from: VertexId, time: u32, to: VertexId },
    /// Sequential-counter register bit `s(index, count)`.
    CounterAux { index: usize, count: usize },
}

/// Bijection between variables `1..=n` and their tags.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    tags: Vec<VarTag>,
    index: HashMap<VarTag, u32>,
}

impl VarMap {
    pub fn new() -> Self {
        VarMap::default()
    }

    /// Allocates the next variable for `tag`. Panics on a duplicate tag.
    pub fn alloc(&mut self, tag: VarTag) -> u32 {
        let var = self.tags.len() as u32 + 1;
        let prev = self.index.insert(tag, var);
        assert!(prev.is_none(), "duplicate variable tag {tag:?}");
        self.tags.push(tag);
        var
    }

    pub fn var(&self, tag: &VarTag) -> Option<u32> {
        self.index.get(tag).copied()
    }

    pub fn tag(&self, var: u32) -> Option<&VarTag> {
        self.tags.get(var.checked_sub(1)? as usize)
    }

    pub fn len(&self) -> u32 {
        self.tags.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &VarTag)> {
        self.tags.iter().enumerate().map(|(i, t)| (i as u32 + 1, t))
    }

    /// Sidecar document mapping every variable to its tag.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry<'a> {
            var: u32,
            #[serde(flatten)]
            tag: &'a VarTag,
        }
        let entries: Vec<Entry> = self.iter().map(|(var, tag)| Entry { var, tag }).collect();
        serde_json::json!({ "variables": entries })
    }
}
