//! Conflict-driven clause-learning solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Outcome, SolveError, SolverStats};
use crate::clock::{Deadline, Stopwatch};
use crate::cnf::{CnfFormula, Model};

const RESTART_BASE: f64 = 100.0;
const RESTART_FACTOR: f64 = 1.5;
const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
/// Learned-clause limit relative to the original clause count.
const LEARNT_RATIO: f64 = 2.0;
const LEARNT_FLOOR: f64 = 1000.0;
/// Applied to the limit after every reduction so that the solver stays
/// complete.
const LEARNT_GROWTH: f64 = 1.1;

/// `var * 2 + negated`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Lit(u32);

impl Lit {
    fn from_dimacs(l: i32) -> Lit {
        let var = l.unsigned_abs() - 1;
        Lit(var * 2 + u32::from(l < 0))
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn negated(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;
const NO_REASON: u32 = u32::MAX;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    clause: u32,
    blocker: Lit,
}

/// Max-heap of variables ordered by activity.
struct VarHeap {
    heap: Vec<usize>,
    position: Vec<usize>,
}

const NOT_IN_HEAP: usize = usize::MAX;

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap { heap: Vec::with_capacity(n), position: vec![NOT_IN_HEAP; n] }
    }

    fn contains(&self, v: usize) -> bool {
        self.position[v] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.position[v] = self.heap.len();
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn increased(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.position[v], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.position[top] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.position[last] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn before(a: usize, b: usize, act: &[f64]) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::before(v, self.heap[parent], act) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.position[self.heap[i]] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.position[v] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len() && Self::before(self.heap[right], self.heap[left], act) {
                right
            } else {
                left
            };
            if !Self::before(self.heap[child], v, act) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.position[self.heap[i]] = i;
            i = child;
        }
        self.heap[i] = v;
        self.position[v] = i;
    }
}

pub(super) struct Limits {
    pub deadline: Deadline,
    pub memory_bytes: Option<u64>,
}

pub(super) struct Cdcl {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    clause_inc: f64,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    ok: bool,
    original_clauses: usize,
    learnt_literals: u64,
    stats: SolverStats,
}

impl Cdcl {
    pub fn new(formula: &CnfFormula, seed: u64) -> Self {
        let n = formula.num_vars() as usize;
        let mut activity = vec![0.0; n];
        if seed != 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for a in &mut activity {
                *a = rng.gen::<f64>() * 1e-5;
            }
        }
        let mut solver = Cdcl {
            clauses: Vec::with_capacity(formula.clauses().len()),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            polarity: vec![true; n],
            activity,
            var_inc: 1.0,
            clause_inc: 1.0,
            heap: VarHeap::new(n),
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; n],
            ok: true,
            original_clauses: 0,
            learnt_literals: 0,
            stats: SolverStats::default(),
        };
        for v in 0..n {
            solver.heap.insert(v, &solver.activity);
        }
        for clause in formula.clauses() {
            solver.add_original(clause);
            if !solver.ok {
                break;
            }
        }
        solver
    }

    fn add_original(&mut self, clause: &[i32]) {
        self.original_clauses += 1;
        let mut lits: Vec<Lit> = clause.iter().map(|&l| Lit::from_dimacs(l)).collect();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        match lits.len() {
            0 => self.ok = false,
            1 => match self.value(lits[0]) {
                TRUE => {}
                FALSE => self.ok = false,
                _ => self.enqueue(lits[0], NO_REASON),
            },
            _ => {
                self.attach(lits, false);
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].index()].push(Watcher { clause: cref, blocker: lits[1] });
        self.watches[lits[1].index()].push(Watcher { clause: cref, blocker: lits[0] });
        if learnt {
            self.learnt_literals += lits.len() as u64;
        }
        self.clauses.push(Clause { lits, learnt, deleted: false, activity: 0.0 });
        cref
    }

    fn value(&self, lit: Lit) -> i8 {
        let a = self.assigns[lit.var()];
        if lit.negated() {
            -a
        } else {
            a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, lit: Lit, reason: u32) {
        let v = lit.var();
        self.assigns[v] = if lit.negated() { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Unit propagation; returns a conflicting clause.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut keep = 0;
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[keep] = w;
                    keep += 1;
                    continue;
                }
                let cref = w.clause as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                let lits = &mut self.clauses[cref].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                if first != w.blocker && self.value(first) == TRUE {
                    ws[keep] = Watcher { clause: w.clause, blocker: first };
                    keep += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[cref].lits.len() {
                    let candidate = self.clauses[cref].lits[k];
                    if self.value(candidate) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[candidate.index()].push(Watcher { clause: w.clause, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[keep] = Watcher { clause: w.clause, blocker: first };
                keep += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.clause);
                    while i < ws.len() {
                        ws[keep] = ws[i];
                        keep += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.clause);
                }
            }
            ws.truncate(keep);
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        c.activity += self.clause_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.clause_inc *= 1e-20;
        }
    }

    /// First-UIP analysis. Returns the learned clause (asserting literal
    /// first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut conflict: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut asserting: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();

        loop {
            let cref = conflict as usize;
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let skip = usize::from(asserting.is_some());
            for k in skip..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let p = self.trail[index];
            asserting = Some(p);
            conflict = self.reason[p.var()];
            self.seen[p.var()] = false;
            pending -= 1;
            if pending == 0 {
                break;
            }
        }
        learnt[0] = !asserting.unwrap();

        // drop literals implied by other literals of the clause
        let original = learnt.clone();
        let mut kept = 1;
        for k in 1..learnt.len() {
            let v = learnt[k].var();
            let r = self.reason[v];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|l| self.seen[l.var()] || self.level[l.var()] == 0);
            if !redundant {
                learnt[kept] = learnt[k];
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for l in &original {
            self.seen[l.var()] = false;
        }

        let backjump = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var()] > self.level[learnt[max_i].var()] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var()]
        };
        (learnt, backjump)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for k in (lim..self.trail.len()).rev() {
            let lit = self.trail[k];
            let v = lit.var();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.polarity[v] = lit.negated();
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(Lit(v as u32 * 2 + u32::from(self.polarity[v])));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let first = self.clauses[cref as usize].lits[0];
        self.reason[first.var()] == cref && self.value(first) == TRUE
    }

    fn reduce_db(&mut self) {
        let mut order = std::mem::take(&mut self.learnts);
        order.sort_by(|&a, &b| self.clauses[a as usize].activity.total_cmp(&self.clauses[b as usize].activity));
        let half = order.len() / 2;
        let mut kept = Vec::with_capacity(order.len());
        for (rank, cref) in order.into_iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if rank < half && c.lits.len() > 2 && !self.locked(cref) {
                self.learnt_literals -= c.lits.len() as u64;
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
                self.stats.deleted_clauses += 1;
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.clause as usize].deleted);
        }
    }

    fn memory_estimate(&self) -> u64 {
        self.learnt_literals * 4 + self.learnts.len() as u64 * 48
    }

    pub fn solve(&mut self, limits: &Limits) -> Result<(Outcome, SolverStats), SolveError> {
        let watch = Stopwatch::start();
        let outcome = self.search(limits);
        self.stats.wall_time = watch.elapsed();
        outcome.map(|o| (o, self.stats.clone()))
    }

    fn search(&mut self, limits: &Limits) -> Result<Outcome, SolveError> {
        if !self.ok {
            return Ok(Outcome::Unsat);
        }
        let mut restart_limit = RESTART_BASE;
        let mut since_restart = 0u64;
        let mut max_learnts = (self.original_clauses as f64 * LEARNT_RATIO).max(LEARNT_FLOOR);

        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    return Ok(Outcome::Unsat);
                }
                let (learnt, backjump) = self.analyze(conflict);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let asserting = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.learnts.push(cref);
                    self.bump_clause(cref as usize);
                    self.enqueue(asserting, cref);
                }
                self.stats.learned_clauses += 1;
                self.var_inc /= VAR_DECAY;
                self.clause_inc /= CLAUSE_DECAY;

                if self.stats.conflicts.is_multiple_of(64) {
                    if limits.deadline.expired() {
                        return Ok(Outcome::Timeout);
                    }
                    if limits.memory_bytes.is_some_and(|m| self.memory_estimate() > m) {
                        return Err(SolveError::MemoryBudget { used: self.memory_estimate() });
                    }
                }
            } else {
                if since_restart as f64 >= restart_limit {
                    self.cancel_until(0);
                    self.stats.restarts += 1;
                    since_restart = 0;
                    restart_limit *= RESTART_FACTOR;
                }
                if self.learnts.len() as f64 >= max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    max_learnts *= LEARNT_GROWTH;
                }
                match self.pick_branch() {
                    None => return Ok(Outcome::Sat(self.model())),
                    Some(lit) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(lit, NO_REASON);
                    }
                }
            }
        }
    }

    fn model(&self) -> Model {
        Model::new(self.assigns.iter().map(|&a| a == TRUE).collect())
    }
}
