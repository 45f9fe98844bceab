//! Threshold decision for the ordered distance.
//!
//! A node pair `(v, w)` can only be part of an ordered mapping of cost at
//! most `τ` if their postorder positions differ by at most `τ`, so every
//! row of every matrix is kept as a band of `2τ + 1` cells and anything
//! outside the band reads as infinite. Values inside the band are exact
//! whenever they are at most `τ` and upper bounds otherwise.
//!
//! The first tree is visited in favorable-child order. A node's running
//! deletion and sequence-matching rows live only while some of its
//! children are done and some are not, which bounds the number of live
//! rows logarithmically. The favorable child is finished first but its
//! sequence-matching row depends on its left siblings, so its tree
//! distance row is parked until the left sibling's row exists.

use serde::Serialize;

use crate::distance::{LabelIds, INF};
use crate::tree::{JsonTree, NodeId};

/// One cell of a sequence matching matrix: child `row` of the first tree
/// against child `col` of the second, inside the matrix of their parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SedCell {
    pub row: NodeId,
    pub col: NodeId,
    pub matrix: (NodeId, NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FilterOutcome {
    pub accepted: bool,
    /// Ordered distance of the roots when accepted.
    pub distance: Option<usize>,
    /// Distance and sequence-matching cells evaluated.
    pub cells: u64,
    /// Largest number of simultaneously live per-node states.
    pub peak_states: usize,
}

/// A window of one matrix row; positions outside it are infinite. `eps`
/// holds the column of the empty prefix.
#[derive(Debug, Clone, Default)]
struct Band {
    lo: usize,
    vals: Vec<i64>,
    eps: i64,
}

impl Band {
    fn reset(&mut self, lo: usize, hi: usize, eps: i64) {
        self.lo = lo;
        self.vals.clear();
        self.vals.resize(hi.saturating_sub(lo), INF);
        self.eps = eps;
    }

    #[inline]
    fn get(&self, w: usize) -> i64 {
        w.checked_sub(self.lo)
            .and_then(|k| self.vals.get(k))
            .copied()
            .unwrap_or(INF)
    }

    #[inline]
    fn at(&self, w: Option<usize>) -> i64 {
        w.map_or(self.eps, |w| self.get(w))
    }

    #[inline]
    fn set(&mut self, w: usize, value: i64) {
        self.vals[w - self.lo] = value.min(INF);
    }

    fn copy_from(&mut self, other: &Band) {
        self.lo = other.lo;
        self.vals.clear();
        self.vals.extend_from_slice(&other.vals);
        self.eps = other.eps;
    }
}

/// Running data of a node whose children are partly processed.
#[derive(Debug, Default)]
struct NodeCostState {
    del_f: Band,
    del_t: Band,
    dt_fc: Band,
    sed_l0: Band,
    sed_l1: Band,
}

/// Insertion costs of the second tree's subtrees, forests, and sibling
/// prefixes.
struct EpsilonCosts {
    dt: Vec<i64>,
    df: Vec<i64>,
    sed: Vec<i64>,
    left_sibling: Vec<Option<NodeId>>,
}

impl EpsilonCosts {
    fn new(t: &JsonTree) -> Self {
        let n = t.len();
        let dt: Vec<i64> = (0..n).map(|w| t.subtree_size(w) as i64).collect();
        let df = dt.iter().map(|&d| d - 1).collect();
        let left_sibling: Vec<_> = (0..n).map(|w| t.left_sibling(w)).collect();
        let mut sed = vec![0; n];
        // left siblings have smaller ids
        for w in 0..n {
            sed[w] = dt[w] + left_sibling[w].map_or(0, |l| sed[l]);
        }
        EpsilonCosts {
            dt,
            df,
            sed,
            left_sibling,
        }
    }
}

/// Previous row of a sequence matching: the all-insert row, or a band.
enum Prev<'a> {
    Empty,
    Row(&'a Band),
}

impl Prev<'_> {
    #[inline]
    fn at(&self, w: Option<usize>, eps: &EpsilonCosts) -> i64 {
        match (self, w) {
            (Prev::Empty, None) => 0,
            (Prev::Empty, Some(w)) => eps.sed[w],
            (Prev::Row(b), w) => b.at(w),
        }
    }

    fn eps(&self) -> i64 {
        match self {
            Prev::Empty => 0,
            Prev::Row(b) => b.eps,
        }
    }
}

struct Filter<'a> {
    t1: &'a JsonTree,
    t2: &'a JsonTree,
    tau: usize,
    eps: EpsilonCosts,
    cells: u64,
    trace: Option<&'a mut Vec<SedCell>>,
}

impl Filter<'_> {
    /// Second-tree positions within `τ` of `v`, as `lo..hi`.
    fn range(&self, v: NodeId) -> (usize, usize) {
        let n2 = self.t2.len();
        let lo = v.saturating_sub(self.tau).min(n2);
        let hi = (v + self.tau + 1).min(n2);
        (lo, hi.max(lo))
    }

    /// Sequence matching row of child `c` (whose tree distances are `dt_c`)
    /// computed from the row of its left sibling.
    fn sed_row(&mut self, out: &mut Band, prev: Prev<'_>, c: NodeId, dt_c: &Band) {
        let (lo, hi) = self.range(c);
        let dt_c_eps = self.t1.subtree_size(c) as i64;
        out.reset(lo, hi, prev.eps() + dt_c_eps);
        let pc = self.t1.parent(c).expect("child has a parent");
        for w in lo..hi {
            let Some(pw) = self.t2.parent(w) else {
                continue;
            };
            self.cells += 1;
            if let Some(trace) = self.trace.as_deref_mut() {
                trace.push(SedCell {
                    row: c,
                    col: w,
                    matrix: (pc, pw),
                });
            }
            let ls = self.eps.left_sibling[w];
            let ins = out.at(ls) + self.eps.dt[w];
            let del = prev.at(Some(w), &self.eps) + dt_c_eps;
            let ren = prev.at(ls, &self.eps) + dt_c.get(w);
            out.set(w, ins.min(del).min(ren));
        }
    }

    fn run(&mut self) -> FilterOutcome {
        let (t1, t2) = (self.t1, self.t2);
        let labels = LabelIds::new(t1, t2);
        let mut stack: Vec<(NodeId, NodeCostState)> = Vec::new();
        let mut pool: Vec<NodeCostState> = Vec::new();
        let mut peak = 0;
        let mut dt_row = Band::default();
        let mut df_row = Band::default();
        let mut root_value = INF;

        for v in t1.favorable_child_order() {
            let (lo, hi) = self.range(v);
            let state = if t1.degree(v) > 0 {
                let (owner, state) = stack.pop().expect("children processed first");
                debug_assert_eq!(owner, v);
                Some(state)
            } else {
                None
            };
            let dt_v_eps = t1.subtree_size(v) as i64;
            let df_v_eps = dt_v_eps - 1;
            dt_row.reset(lo, hi, dt_v_eps);
            df_row.reset(lo, hi, df_v_eps);
            for w in lo..hi {
                self.cells += 1;
                let (mut ins_f, mut ins_t) = (INF, INF);
                for &c in t2.children(w).iter().rev() {
                    if c < lo {
                        break;
                    }
                    ins_f = ins_f.min(self.eps.df[w] + df_row.get(c) - self.eps.df[c]);
                    ins_t = ins_t.min(self.eps.dt[w] + dt_row.get(c) - self.eps.dt[c]);
                }
                let (del_f, del_t, ren_f) = match &state {
                    Some(s) => {
                        let ren_f = match t2.children(w).last() {
                            Some(&last) => s.sed_l0.get(last),
                            None => df_v_eps,
                        };
                        (df_v_eps + s.del_f.get(w), dt_v_eps + s.del_t.get(w), ren_f)
                    }
                    None => (INF, INF, self.eps.df[w]),
                };
                let df = ins_f.min(del_f).min(ren_f).min(INF);
                let ren_t = df + i64::from(labels.rename_cost(t1, t2, v, w));
                let dt = ins_t.min(del_t).min(ren_t).min(INF);
                df_row.set(w, df);
                dt_row.set(w, dt);
            }
            if let Some(s) = state {
                pool.push(s);
            }

            let Some(p) = t1.parent(v) else {
                root_value = dt_row.get(t2.len() - 1);
                continue;
            };
            let fav = t1.favorable_child(p).expect("parent has children");
            if fav == v {
                let mut s = pool.pop().unwrap_or_default();
                let (plo, phi) = self.range(p);
                s.del_f.reset(plo, phi, 0);
                s.del_t.reset(plo, phi, 0);
                stack.push((p, s));
                peak = peak.max(stack.len());
            }
            let (owner, s) = stack.last_mut().expect("parent state");
            debug_assert_eq!(*owner, p);

            let (plo, phi) = (s.del_f.lo, s.del_f.lo + s.del_f.vals.len());
            for w in lo.max(plo)..hi.min(phi) {
                let f = df_row.get(w) - df_v_eps;
                let t = dt_row.get(w) - dt_v_eps;
                s.del_f.set(w, s.del_f.get(w).min(f));
                s.del_t.set(w, s.del_t.get(w).min(t));
            }

            let i = t1.child_position(v);
            let f = t1.child_position(fav);
            let NodeCostState {
                dt_fc,
                sed_l0,
                sed_l1,
                ..
            } = s;
            if v == fav {
                if i == 0 {
                    self.sed_row(sed_l1, Prev::Empty, v, &dt_row);
                    std::mem::swap(sed_l0, sed_l1);
                } else {
                    dt_fc.copy_from(&dt_row);
                }
            } else {
                let prev = if i == 0 { Prev::Empty } else { Prev::Row(sed_l0) };
                let mut next = std::mem::take(sed_l1);
                self.sed_row(&mut next, prev, v, &dt_row);
                if i + 1 == f {
                    self.sed_row(sed_l0, Prev::Row(&next), fav, dt_fc);
                } else {
                    std::mem::swap(sed_l0, &mut next);
                }
                *sed_l1 = next;
            }
        }

        let distance = (root_value <= self.tau as i64).then_some(root_value as usize);
        FilterOutcome {
            accepted: distance.is_some(),
            distance,
            cells: self.cells,
            peak_states: peak,
        }
    }
}

fn evaluate(t1: &JsonTree, t2: &JsonTree, tau: usize, trace: Option<&mut Vec<SedCell>>) -> FilterOutcome {
    let (n1, n2) = (t1.len(), t2.len());
    if n1.abs_diff(n2) > tau {
        return FilterOutcome::default();
    }
    if n1 == 0 || n2 == 0 {
        let d = n1 + n2;
        return FilterOutcome {
            accepted: d <= tau,
            distance: (d <= tau).then_some(d),
            ..FilterOutcome::default()
        };
    }
    Filter {
        t1,
        t2,
        tau,
        eps: EpsilonCosts::new(t2),
        cells: 0,
        trace,
    }
    .run()
}

/// True iff the ordered distance between the two sorted trees is at most
/// `tau`.
pub fn jofilter(t1: &JsonTree, t2: &JsonTree, tau: usize) -> bool {
    evaluate(t1, t2, tau, None).accepted
}

/// [`jofilter`] with its cell and live-state counters.
pub fn jofilter_with_stats(t1: &JsonTree, t2: &JsonTree, tau: usize) -> FilterOutcome {
    evaluate(t1, t2, tau, None)
}

/// The sequence matching cells the filter evaluates for row node `v`,
/// in evaluation order.
pub fn tau_sed_cells(t1: &JsonTree, t2: &JsonTree, v: NodeId, tau: usize) -> Vec<SedCell> {
    let mut trace = Vec::new();
    evaluate(t1, t2, tau, Some(&mut trace));
    trace.retain(|c| c.row == v);
    trace
}
