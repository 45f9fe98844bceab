//! Child-matching kernels: ordered (sequence edit distance) and unordered
//! (min-cost assignment) matchings between two child lists, plus the cheap
//! lower bounds used to skip them.

/// Costs for matching the children `c_i` of one node against the children
/// `c'_j` of another.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChildMatchingProblem {
    rows: usize,
    cols: usize,
    pair: Vec<u32>,
    delete: Vec<u32>,
    insert: Vec<u32>,
    /// True iff both parents are arrays.
    pub ordered: bool,
}

impl ChildMatchingProblem {
    /// `pair` is row-major with `delete.len()` rows and `insert.len()` columns.
    pub fn new(pair: Vec<u32>, delete: Vec<u32>, insert: Vec<u32>, ordered: bool) -> Self {
        assert_eq!(pair.len(), delete.len() * insert.len());
        ChildMatchingProblem {
            rows: delete.len(),
            cols: insert.len(),
            pair,
            delete,
            insert,
            ordered,
        }
    }

    /// Reuses the buffers for a new `rows x cols` instance.
    pub(crate) fn reset(&mut self, rows: usize, cols: usize, ordered: bool) {
        self.rows = rows;
        self.cols = cols;
        self.ordered = ordered;
        self.pair.clear();
        self.pair.resize(rows * cols, 0);
        self.delete.clear();
        self.delete.resize(rows, 0);
        self.insert.clear();
        self.insert.resize(cols, 0);
    }

    pub(crate) fn set_pair(&mut self, i: usize, j: usize, cost: u32) {
        self.pair[i * self.cols + j] = cost;
    }

    pub(crate) fn set_delete(&mut self, i: usize, cost: u32) {
        self.delete[i] = cost;
    }

    pub(crate) fn set_insert(&mut self, j: usize, cost: u32) {
        self.insert[j] = cost;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pair(&self, i: usize, j: usize) -> u32 {
        self.pair[i * self.cols + j]
    }

    pub fn delete(&self, i: usize) -> u32 {
        self.delete[i]
    }

    pub fn insert(&self, j: usize) -> u32 {
        self.insert[j]
    }

    fn delete_all(&self) -> u64 {
        self.delete.iter().map(|&c| u64::from(c)).sum()
    }

    fn insert_all(&self) -> u64 {
        self.insert.iter().map(|&c| u64::from(c)).sum()
    }
}

fn narrow(x: u64) -> u32 {
    u32::try_from(x).expect("matching cost fits in u32")
}

/// Minimum cost of an order-preserving matching.
pub fn sed_matching(p: &ChildMatchingProblem) -> u32 {
    let (m, n) = (p.rows, p.cols);
    let mut prev: Vec<u64> = Vec::with_capacity(n + 1);
    prev.push(0);
    for j in 0..n {
        prev.push(prev[j] + u64::from(p.insert(j)));
    }
    let mut cur = vec![0u64; n + 1];
    for i in 0..m {
        cur[0] = prev[0] + u64::from(p.delete(i));
        for j in 0..n {
            let ins = cur[j] + u64::from(p.insert(j));
            let del = prev[j + 1] + u64::from(p.delete(i));
            let ren = prev[j] + u64::from(p.pair(i, j));
            cur[j + 1] = ins.min(del).min(ren);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    narrow(prev[n])
}

/// Minimum cost of a one-to-one matching in which every child of the larger
/// side is matched either to a child of the smaller side or to `ε`.
///
/// Solved exactly with the Hungarian algorithm on a square matrix where the
/// smaller side is padded with `ε` columns (or rows).
pub fn bpm_matching(p: &ChildMatchingProblem) -> u32 {
    let (m, n) = (p.rows, p.cols);
    if m == 0 || n == 0 {
        return narrow(p.delete_all() + p.insert_all());
    }
    // The smaller side is assigned to nodes of the larger side or to one of
    // its own empty slots. The larger side is charged in full up front and
    // refunded per assigned node.
    let transposed = m > n;
    let (rows, cols) = if transposed { (n, m) } else { (m, n) };
    let pair = |r: usize, c: usize| if transposed { p.pair(c, r) } else { p.pair(r, c) };
    let own = |r: usize| if transposed { p.insert(r) } else { p.delete(r) };
    let other = |c: usize| if transposed { p.delete(c) } else { p.insert(c) };
    let cost = |r: usize, c: usize| -> i64 {
        if c < cols {
            i64::from(pair(r, c)) - i64::from(other(c))
        } else {
            i64::from(own(r))
        }
    };
    let width = cols + rows;
    let mut matrix = Vec::with_capacity(rows * width);
    for r in 0..rows {
        matrix.extend((0..width).map(|c| cost(r, c)));
    }
    let assignment = hungarian(rows, width, &matrix);
    let upfront = if transposed { p.delete_all() } else { p.insert_all() } as i64;
    let total = upfront + assignment.iter().enumerate().map(|(r, &c)| matrix[r * width + c]).sum::<i64>();
    narrow(total as u64)
}

/// Min-cost assignment of every row to a distinct column of the row-major
/// `rows x cols` matrix, `rows <= cols`. Returns the column of each row.
fn hungarian(rows: usize, cols: usize, matrix: &[i64]) -> Vec<usize> {
    debug_assert!(rows <= cols);
    const INF: i64 = i64::MAX / 4;
    // 1-based with a virtual column 0, following the potentials formulation
    let mut u = vec![0i64; rows + 1];
    let mut v = vec![0i64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![INF; cols + 1];
    let mut used = vec![false; cols + 1];
    for row in 1..=rows {
        owner[0] = row;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = INF);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row_costs = &matrix[(i0 - 1) * cols..i0 * cols];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = row_costs[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Result of the local greedy check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyBound {
    /// Lower bound on [`bpm_matching`].
    pub bound: u32,
    /// The exact matching cost, when the greedy choice already is optimal.
    pub exact: Option<u32>,
}

/// Greedy lower bound: every child independently takes its cheapest partner
/// (or `ε`), once from each side; the larger of the two sums is a bound.
///
/// `exact` is reported when a greedy choice is injective and, completed with
/// `ε` for the other side's leftovers, costs no more than the bound. With a
/// single child on either side the optimum is computed directly.
///
/// Exactness relies on `pair(i, j) <= delete(i) + insert(j)`, which tree
/// distances always satisfy.
pub fn local_greedy_bound(p: &ChildMatchingProblem) -> GreedyBound {
    let (m, n) = (p.rows, p.cols);
    if m == 0 || n == 0 {
        let c = narrow(p.delete_all() + p.insert_all());
        return GreedyBound {
            bound: c,
            exact: Some(c),
        };
    }
    if m == 1 || n == 1 {
        let c = narrow(single_child_optimum(p));
        return GreedyBound {
            bound: c,
            exact: Some(c),
        };
    }

    let mut row_sum = 0u64;
    let mut row_pick: Vec<Option<usize>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut best = p.delete(i);
        let mut pick = None;
        for j in 0..n {
            if p.pair(i, j) < best {
                best = p.pair(i, j);
                pick = Some(j);
            }
        }
        row_sum += u64::from(best);
        row_pick.push(pick);
    }
    let mut col_sum = 0u64;
    let mut col_pick: Vec<Option<usize>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut best = p.insert(j);
        let mut pick = None;
        for i in 0..m {
            if p.pair(i, j) < best {
                best = p.pair(i, j);
                pick = Some(i);
            }
        }
        col_sum += u64::from(best);
        col_pick.push(pick);
    }
    let bound = row_sum.max(col_sum);

    let completed = |picks: &[Option<usize>], sum: u64, leftover: &dyn Fn(usize) -> u32, width: usize| {
        let mut taken = vec![false; width];
        for &k in picks.iter().flatten() {
            if std::mem::replace(&mut taken[k], true) {
                return None;
            }
        }
        let rest: u64 = (0..width)
            .filter(|&k| !taken[k])
            .map(|k| u64::from(leftover(k)))
            .sum();
        Some(sum + rest)
    };
    let from_rows = completed(&row_pick, row_sum, &|j| p.insert(j), n);
    let from_cols = completed(&col_pick, col_sum, &|i| p.delete(i), m);
    let exact = [from_rows, from_cols]
        .into_iter()
        .flatten()
        .find(|&c| c <= bound)
        .map(narrow);
    GreedyBound {
        bound: exact.unwrap_or(narrow(bound)),
        exact,
    }
}

fn single_child_optimum(p: &ChildMatchingProblem) -> u64 {
    if p.rows == 1 {
        let base = p.insert_all() as i64;
        let mut delta = i64::from(p.delete(0));
        for j in 0..p.cols {
            delta = delta.min(i64::from(p.pair(0, j)) - i64::from(p.insert(j)));
        }
        (base + delta) as u64
    } else {
        let base = p.delete_all() as i64;
        let mut delta = i64::from(p.insert(0));
        for i in 0..p.rows {
            delta = delta.min(i64::from(p.pair(i, 0)) - i64::from(p.delete(i)));
        }
        (base + delta) as u64
    }
}

/// Constant-time lower bound on [`bpm_matching`] from the sorted aggregate
/// child sizes of the two nodes.
///
/// With `d_v <= d_w` (roles are swapped otherwise) and `k = d_w - d_v`, the
/// bound is `|S_v[d_v] - S_w[d_w] + S_w[k]| + S_w[k]`, where `S[i]` is the
/// sum of the `i` smallest child subtree sizes.
pub fn aggregate_size_bound(sas_v: &[usize], sas_w: &[usize]) -> usize {
    let (small, large) = if sas_v.len() <= sas_w.len() {
        (sas_v, sas_w)
    } else {
        (sas_w, sas_v)
    };
    let k = large.len() - small.len();
    let prefix = |s: &[usize], i: usize| if i == 0 { 0 } else { s[i - 1] };
    let s_small = prefix(small, small.len());
    let s_large = prefix(large, large.len());
    let s_k = prefix(large, k);
    (s_small as i64 - s_large as i64 + s_k as i64).unsigned_abs() as usize + s_k
}
