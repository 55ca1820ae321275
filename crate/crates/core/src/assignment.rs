//! Exact minimum-cost rectangular linear assignment.
//!
//! Entries equal to `+inf` mark forbidden pairs. [`solve_lap`] first maximizes
//! the number of allowed pairs, then minimizes their total cost, then picks the
//! lexicographically smallest pair list among the remaining optima.
//!
//! The solver is the shortest-augmenting-path Hungarian method run on a padded
//! square matrix whose entries are `(forbidden, cost)` pairs ordered
//! lexicographically. Ties are resolved afterwards by rerouting alternating
//! cycles inside the equality subgraph of the optimal dual.
//!
//! Tie-breaking is exact when all partial sums are exactly representable
//! (integer costs, for instance). For general real costs two optima whose sums
//! differ only by rounding are not treated as tied.

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignmentError {
    #[error("cost matrix of {rows}x{cols} needs {expected} entries, got {got}")]
    DimensionMismatch { rows: usize, cols: usize, expected: usize, got: usize },
    #[error("cost entry ({row}, {col}) = {value} is neither finite nor +inf")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("brute-force oracle limited to min(rows, cols) <= {limit}, got {size}")]
    OracleTooLarge { size: usize, limit: usize },
}

/// Row-major cost matrix; `f64::INFINITY` marks a forbidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssignmentError> {
        if data.len() != rows * cols {
            return Err(AssignmentError::DimensionMismatch { rows, cols, expected: rows * cols, got: data.len() });
        }
        for (i, &value) in data.iter().enumerate() {
            if !(value.is_finite() || value == f64::INFINITY) {
                return Err(AssignmentError::InvalidEntry { row: i / cols, col: i % cols, value });
            }
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignmentError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, AssignmentError> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn is_allowed(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_finite()
    }
}

/// A partial matching; `pairs` is sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Column matched to each row, `None` for unmatched rows.
    pub fn row_to_col(&self, rows: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; rows];
        for &(r, c) in &self.pairs {
            out[r] = Some(c);
        }
        out
    }
}

/// Sums pair costs in row order. Both the solver and the oracle use this so equal
/// pair sets always report bit-identical totals.
fn canonical_cost(m: &CostMatrix, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().fold(0.0, |acc, &(r, c)| acc + m.get(r, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Lex {
    forbidden: i64,
    cost: f64,
}

impl Lex {
    const ZERO: Lex = Lex { forbidden: 0, cost: 0.0 };
    const INF: Lex = Lex { forbidden: i64::MAX / 4, cost: 0.0 };

    fn add(self, o: Lex) -> Lex {
        Lex { forbidden: self.forbidden + o.forbidden, cost: self.cost + o.cost }
    }

    fn sub(self, o: Lex) -> Lex {
        Lex { forbidden: self.forbidden - o.forbidden, cost: self.cost - o.cost }
    }

    fn lt(self, o: Lex) -> bool {
        self.forbidden < o.forbidden || (self.forbidden == o.forbidden && self.cost < o.cost)
    }
}

struct Padded<'a> {
    m: &'a CostMatrix,
    n: usize,
}

impl Padded<'_> {
    fn at(&self, r: usize, c: usize) -> Lex {
        if r < self.m.rows && c < self.m.cols {
            let v = self.m.get(r, c);
            if v.is_finite() {
                Lex { forbidden: 0, cost: v }
            } else {
                Lex { forbidden: 1, cost: 0.0 }
            }
        } else {
            Lex::ZERO
        }
    }
}

/// Hungarian method on the padded square problem. Returns `(col_of_row, u, v)`
/// where `u`, `v` are optimal dual potentials.
fn hungarian(p: &Padded<'_>) -> (Vec<usize>, Vec<Lex>, Vec<Lex>) {
    let n = p.n;
    // 1-based arrays; index 0 is the virtual root column.
    let mut u = vec![Lex::ZERO; n + 1];
    let mut v = vec![Lex::ZERO; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![Lex::INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = p.at(i0 - 1, j - 1).sub(u[i0]).sub(v[j]);
                if cur.lt(minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j].lt(delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] = u[row_of[j]].add(delta);
                    v[j] = v[j].sub(delta);
                } else {
                    minv[j] = minv[j].sub(delta);
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    (col_of, u[1..].to_vec(), v[1..].to_vec())
}

struct TieBreaker<'a> {
    p: Padded<'a>,
    u: Vec<Lex>,
    v: Vec<Lex>,
    tol: f64,
    col_of: Vec<usize>,
    row_of: Vec<usize>,
    /// Settled value per real row: a real column, or `cols` for "unmatched".
    fixed: Vec<Option<usize>>,
    visited: Vec<bool>,
}

impl TieBreaker<'_> {
    /// Order key of row `r` sitting in column `c`: the column when it is an allowed
    /// real column, otherwise `cols` (all unmatched placements are equivalent).
    fn value(&self, r: usize, c: usize) -> usize {
        let m = self.p.m;
        if c < m.cols && m.is_allowed(r, c) {
            c
        } else {
            m.cols
        }
    }

    fn tight(&self, r: usize, c: usize) -> bool {
        if self.col_of[r] == c {
            return true;
        }
        let rc = self.p.at(r, c).sub(self.u[r]).sub(self.v[c]);
        rc.forbidden == 0 && rc.cost.abs() <= self.tol
    }

    fn movable(&self, r: usize, c: usize) -> bool {
        if r >= self.p.m.rows {
            return true;
        }
        match self.fixed[r] {
            None => true,
            Some(v) if v == self.p.m.cols => self.value(r, c) == v,
            Some(_) => false,
        }
    }

    fn real_pairs(&self) -> Vec<(usize, usize)> {
        let m = self.p.m;
        (0..m.rows)
            .filter_map(|r| {
                let c = self.col_of[r];
                (c < m.cols && m.is_allowed(r, c)).then_some((r, c))
            })
            .collect()
    }

    /// Finds an alternating path that re-seats `row` and ends by filling `target`.
    fn augment(&mut self, row: usize, target: usize) -> bool {
        for d in 0..self.p.n {
            if self.visited[d] || !self.tight(row, d) || !self.movable(row, d) {
                continue;
            }
            self.visited[d] = true;
            let seat = |s: &mut Self| {
                s.col_of[row] = d;
                s.row_of[d] = row;
            };
            if d == target {
                seat(self);
                return true;
            }
            let holder = self.row_of[d];
            if self.augment(holder, target) {
                seat(self);
                return true;
            }
        }
        false
    }

    fn try_reroute(&mut self, r: usize, c: usize, best: (usize, f64)) -> bool {
        let saved = (self.col_of.clone(), self.row_of.clone());
        let holder = self.row_of[c];
        let old = self.col_of[r];
        self.col_of[r] = c;
        self.row_of[c] = r;
        self.visited.iter_mut().for_each(|x| *x = false);
        self.visited[c] = true;
        if self.augment(holder, old) {
            let pairs = self.real_pairs();
            if (pairs.len(), canonical_cost(self.p.m, &pairs)) == best {
                return true;
            }
        }
        self.col_of = saved.0;
        self.row_of = saved.1;
        false
    }

    fn run(&mut self) {
        let m = self.p.m;
        let pairs = self.real_pairs();
        let best = (pairs.len(), canonical_cost(m, &pairs));
        for r in 0..m.rows {
            let current = self.value(r, self.col_of[r]);
            for c in 0..current.min(m.cols) {
                if !m.is_allowed(r, c) || !self.tight(r, c) {
                    continue;
                }
                if self.try_reroute(r, c, best) {
                    break;
                }
            }
            self.fixed[r] = Some(self.value(r, self.col_of[r]));
        }
    }
}

/// Exact rectangular assignment with deterministic lexicographic tie-break.
pub fn solve_lap(m: &CostMatrix) -> Assignment {
    if m.rows == 0 || m.cols == 0 {
        return Assignment { pairs: Vec::new(), total_cost: 0.0 };
    }
    let n = m.rows.max(m.cols);
    let p = Padded { m, n };
    let (col_of, u, v) = hungarian(&p);
    let max_abs = m.data.iter().filter(|x| x.is_finite()).fold(0.0f64, |a, x| a.max(x.abs()));
    let mut row_of = vec![0usize; n];
    for (r, &c) in col_of.iter().enumerate() {
        row_of[c] = r;
    }
    let mut tb = TieBreaker {
        p,
        u,
        v,
        tol: 1e-9 * (1.0 + max_abs),
        col_of,
        row_of,
        fixed: vec![None; m.rows],
        visited: vec![false; n],
    };
    tb.run();
    let pairs = tb.real_pairs();
    let total_cost = canonical_cost(m, &pairs);
    Assignment { pairs, total_cost }
}

pub const BRUTE_FORCE_LIMIT: usize = 8;

/// `(size, cost, pairs)` of a candidate matching.
type Candidate = (usize, f64, Vec<(usize, usize)>);

/// Exhaustive reference solver: enumerates every injection of the smaller side
/// into the larger and keeps the best allowed sub-matching under the same
/// ordering as [`solve_lap`] (size desc, cost asc, pair list asc).
pub fn brute_force_lap(m: &CostMatrix) -> Result<Assignment, AssignmentError> {
    let small = m.rows.min(m.cols);
    if small > BRUTE_FORCE_LIMIT {
        return Err(AssignmentError::OracleTooLarge { size: small, limit: BRUTE_FORCE_LIMIT });
    }
    let transpose = m.rows > m.cols;
    let (k, big) = if transpose { (m.cols, m.rows) } else { (m.rows, m.cols) };
    let mut best: Option<Candidate> = None;
    let mut chosen = Vec::with_capacity(k);
    let mut used = vec![false; big];

    fn better(a: &Candidate, b: &Candidate) -> bool {
        match b.0.cmp(&a.0) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => match a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => a.2 < b.2,
            },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        m: &CostMatrix,
        transpose: bool,
        k: usize,
        big: usize,
        chosen: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<Candidate>,
    ) {
        if chosen.len() == k {
            let mut pairs: Vec<(usize, usize)> = chosen
                .iter()
                .enumerate()
                .map(|(i, &j)| if transpose { (j, i) } else { (i, j) })
                .filter(|&(r, c)| m.is_allowed(r, c))
                .collect();
            pairs.sort_unstable();
            let cand = (pairs.len(), canonical_cost(m, &pairs), pairs);
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                *best = Some(cand);
            }
            return;
        }
        for j in 0..big {
            if used[j] {
                continue;
            }
            used[j] = true;
            chosen.push(j);
            rec(m, transpose, k, big, chosen, used, best);
            chosen.pop();
            used[j] = false;
        }
    }

    rec(m, transpose, k, big, &mut chosen, &mut used, &mut best);
    let (_, total_cost, pairs) = best.unwrap_or((0, 0.0, Vec::new()));
    Ok(Assignment { pairs, total_cost })
}
