use super::Lit;

/// Clauses of a sequential counter plus the register bits it allocated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterEncoding {
    pub clauses: Vec<Vec<Lit>>,
    /// `(i, j)` for register bit `s(i, j)`, in variable order starting at
    /// the `first_aux` passed to [`sequential_counter`].
    pub aux: Vec<(usize, usize)>,
}

impl CounterEncoding {
    pub fn aux_count(&self) -> u32 {
        self.aux.len() as u32
    }
}

/// Sinz's sequential counter for `at most bound of lits`.
///
/// Register bit `s(i, j)` (1 ≤ i < n, 1 ≤ j ≤ bound) means at least `j` of
/// the first `i` literals are true. Clauses have at most three literals and
/// there are `2·n·bound + n − 3·bound − 1` of them. No clauses are produced
/// when `bound >= n`; `bound == 0` yields unit clauses.
pub fn sequential_counter(lits: &[Lit], bound: usize, first_aux: u32) -> CounterEncoding {
    let n = lits.len();
    if bound >= n {
        return CounterEncoding { clauses: Vec::new(), aux: Vec::new() };
    }
    if bound == 0 {
        return CounterEncoding { clauses: lits.iter().map(|&x| vec![-x]).collect(), aux: Vec::new() };
    }
    let k = bound;
    let s = |i: usize, j: usize| -> Lit { (first_aux as usize + (i - 1) * k + (j - 1)) as Lit };
    let mut clauses = Vec::with_capacity(2 * n * k + n);
    let x = |i: usize| lits[i - 1];

    clauses.push(vec![-x(1), s(1, 1)]);
    for j in 2..=k {
        clauses.push(vec![-s(1, j)]);
    }
    for i in 2..n {
        clauses.push(vec![-x(i), s(i, 1)]);
        clauses.push(vec![-s(i - 1, 1), s(i, 1)]);
        for j in 2..=k {
            clauses.push(vec![-x(i), -s(i - 1, j - 1), s(i, j)]);
            clauses.push(vec![-s(i - 1, j), s(i, j)]);
        }
        clauses.push(vec![-x(i), -s(i - 1, k)]);
    }
    clauses.push(vec![-x(n), -s(n - 1, k)]);

    let aux = (1..n).flat_map(|i| (1..=k).map(move |j| (i, j))).collect();
    CounterEncoding { clauses, aux }
}
