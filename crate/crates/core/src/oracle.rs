//! Exhaustive minimum-cost edit mapping search for small trees.
//!
//! This is the ground truth the dynamic programs are tested against: it
//! enumerates node pairings directly and enforces the mapping constraints
//! pair by pair, with no recursion over subforests.

use serde::Serialize;

use crate::distance::LabelIds;
use crate::error::OracleError;
use crate::tree::{JsonTree, NodeId, NodeType};

/// Default per-tree node limit for [`min_mapping`].
pub const DEFAULT_SIZE_LIMIT: usize = 10;

/// Which mapping constraints are enforced. One-to-one is always enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstraintSet {
    pub ancestor: bool,
    pub types: bool,
    pub array_order: bool,
    pub document_preserving: bool,
    /// Sibling order over all nodes, not just array children.
    pub total_order: bool,
}

impl ConstraintSet {
    /// The JSON edit mapping constraints.
    pub const JEDI: ConstraintSet = ConstraintSet {
        ancestor: true,
        types: true,
        array_order: true,
        document_preserving: true,
        total_order: false,
    };

    /// JSON edit mapping constraints plus a total sibling order.
    pub const JEDI_ORDER: ConstraintSet = ConstraintSet {
        total_order: true,
        ..ConstraintSet::JEDI
    };

    pub fn without_document_preserving(self) -> Self {
        ConstraintSet {
            document_preserving: false,
            ..self
        }
    }

    fn normalized(self) -> Self {
        ConstraintSet {
            array_order: self.array_order || self.total_order,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EditMapping {
    /// `(node of the first tree, node of the second tree)`, by node id.
    pub pairs: Vec<(NodeId, NodeId)>,
    pub cost: usize,
}

impl EditMapping {
    pub fn new(pairs: Vec<(NodeId, NodeId)>, t1: &JsonTree, t2: &JsonTree) -> Self {
        let cost = mapping_cost(&pairs, t1, t2);
        EditMapping { pairs, cost }
    }
}

/// Unit-cost value of a mapping: one per unmapped node on either side plus
/// one per mapped pair whose type or label differ.
pub fn mapping_cost(pairs: &[(NodeId, NodeId)], t1: &JsonTree, t2: &JsonTree) -> usize {
    let renames = pairs
        .iter()
        .filter(|&&(v, w)| t1.node_type(v) != t2.node_type(w) || t1.label(v) != t2.label(w))
        .count();
    renames + (t1.len() - pairs.len()) + (t2.len() - pairs.len())
}

/// Sibling order: `Some(true)` if `x` precedes `y`, `None` if incomparable.
fn sibling_order(t: &JsonTree, x: NodeId, y: NodeId) -> Option<bool> {
    if x == y || t.is_ancestor(x, y) || t.is_ancestor(y, x) {
        return None;
    }
    (t.node_type(t.lca(x, y)) == NodeType::Array).then_some(x < y)
}

/// `x` is left of `y`: not related by ancestry and earlier in postorder.
fn left_of(t: &JsonTree, x: NodeId, y: NodeId) -> bool {
    x < y && !t.is_ancestor(y, x)
}

fn proper_ancestor(t: &JsonTree, a: NodeId, d: NodeId) -> bool {
    t.is_ancestor(a, d)
}

struct Checker<'a> {
    t1: &'a JsonTree,
    t2: &'a JsonTree,
    c: ConstraintSet,
}

impl Checker<'_> {
    /// Constraints over two distinct pairs.
    fn pair_ok(&self, (v, w): (NodeId, NodeId), (a, b): (NodeId, NodeId)) -> bool {
        let (t1, t2) = (self.t1, self.t2);
        if (v == a) != (w == b) {
            return false;
        }
        if self.c.ancestor
            && (t1.is_ancestor(v, a) != t2.is_ancestor(w, b)
                || t1.is_ancestor(a, v) != t2.is_ancestor(b, w))
        {
            return false;
        }
        if self.c.array_order {
            if let (Some(x), Some(y)) = (sibling_order(t1, v, a), sibling_order(t2, w, b)) {
                if x != y {
                    return false;
                }
            }
        }
        if self.c.total_order
            && (left_of(t1, v, a) != left_of(t2, w, b) || left_of(t1, a, v) != left_of(t2, b, w))
        {
            return false;
        }
        true
    }

    fn single_ok(&self, (v, w): (NodeId, NodeId)) -> bool {
        !self.c.types || self.t1.node_type(v) == self.t2.node_type(w)
    }

    fn triple_ok(&self, x: (NodeId, NodeId), y: (NodeId, NodeId), z: (NodeId, NodeId)) -> bool {
        let left = proper_ancestor(self.t1, self.t1.lca(x.0, y.0), z.0);
        let right = proper_ancestor(self.t2, self.t2.lca(x.1, y.1), z.1);
        left == right
    }

    /// Checks every constraint that involves `new` against `pairs`, which
    /// must already be mutually consistent.
    fn extends(&self, pairs: &[(NodeId, NodeId)], new: (NodeId, NodeId)) -> bool {
        if !self.single_ok(new) || !pairs.iter().all(|&p| self.pair_ok(new, p)) {
            return false;
        }
        if !self.c.document_preserving {
            return true;
        }
        // every ordered triple containing `new`, repeats included
        let all = || pairs.iter().copied().chain(std::iter::once(new));
        for x in all() {
            for y in all() {
                if !self.triple_ok(new, x, y) || !self.triple_ok(x, new, y) || !self.triple_ok(x, y, new) {
                    return false;
                }
            }
        }
        true
    }
}

/// True iff `m` is one-to-one, refers to valid nodes, and satisfies every
/// enabled constraint.
pub fn validate_mapping(m: &EditMapping, t1: &JsonTree, t2: &JsonTree, c: ConstraintSet) -> bool {
    if m.pairs.iter().any(|&(v, w)| v >= t1.len() || w >= t2.len()) {
        return false;
    }
    let checker = Checker {
        t1,
        t2,
        c: c.normalized(),
    };
    for (i, &p) in m.pairs.iter().enumerate() {
        if !checker.extends(&m.pairs[..i], p) {
            return false;
        }
    }
    true
}

/// Minimum-cost mapping under `c`, for trees of at most
/// [`DEFAULT_SIZE_LIMIT`] nodes.
pub fn min_mapping(t1: &JsonTree, t2: &JsonTree, c: ConstraintSet) -> Result<EditMapping, OracleError> {
    min_mapping_with_limit(t1, t2, c, DEFAULT_SIZE_LIMIT)
}

pub fn min_mapping_with_limit(
    t1: &JsonTree,
    t2: &JsonTree,
    c: ConstraintSet,
    limit: usize,
) -> Result<EditMapping, OracleError> {
    for t in [t1, t2] {
        if t.len() > limit {
            return Err(OracleError::SizeLimit {
                size: t.len(),
                limit,
            });
        }
    }
    let c = c.normalized();
    let labels = LabelIds::new(t1, t2);
    let label_count = labels.left.iter().chain(&labels.right).map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut search = Search {
        checker: Checker { t1, t2, c },
        labels,
        label_count,
        used: vec![false; t2.len()],
        pairs: Vec::new(),
        renames: 0,
        deleted: 0,
        best_cost: t1.len() + t2.len(),
        best_pairs: Vec::new(),
        counts: vec![0; label_count],
    };
    search.go(t1.len());
    Ok(EditMapping {
        pairs: search.best_pairs,
        cost: search.best_cost,
    })
}

struct Search<'a> {
    checker: Checker<'a>,
    labels: LabelIds,
    label_count: usize,
    used: Vec<bool>,
    pairs: Vec<(NodeId, NodeId)>,
    renames: usize,
    deleted: usize,
    best_cost: usize,
    best_pairs: Vec<(NodeId, NodeId)>,
    counts: Vec<i32>,
}

fn group(t: NodeType, by_type: bool) -> usize {
    if by_type {
        t as usize
    } else {
        0
    }
}

impl Search<'_> {
    /// Lower bound on the cost still to come when the first-tree nodes
    /// `0..remaining` are undecided.
    fn remaining_bound(&mut self, remaining: usize) -> usize {
        let (t1, t2) = (self.checker.t1, self.checker.t2);
        let by_type = self.checker.c.types;
        let mut left = [0usize; 4];
        let mut right = [0usize; 4];
        let mut common = [0usize; 4];
        self.counts.iter_mut().for_each(|c| *c = 0);
        for v in 0..remaining {
            left[group(t1.node_type(v), by_type)] += 1;
            self.counts[self.labels.left[v] as usize] += 1;
        }
        for w in 0..t2.len() {
            if self.used[w] {
                continue;
            }
            let g = group(t2.node_type(w), by_type);
            right[g] += 1;
            let slot = &mut self.counts[self.labels.right[w] as usize];
            if *slot > 0 {
                *slot -= 1;
                common[g] += 1;
            }
        }
        (0..4).map(|g| left[g].max(right[g]) - common[g]).sum()
    }

    fn go(&mut self, remaining: usize) {
        debug_assert!(self.counts.len() == self.label_count);
        let so_far = self.renames + self.deleted;
        if so_far + self.remaining_bound(remaining) >= self.best_cost {
            return;
        }
        let (t1, t2) = (self.checker.t1, self.checker.t2);
        if remaining == 0 {
            let cost = so_far + (t2.len() - self.pairs.len());
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best_pairs = self.pairs.clone();
            }
            return;
        }
        // parents are decided before their children
        let v = remaining - 1;
        let mut candidates: Vec<(bool, NodeId)> = (0..t2.len())
            .filter(|&w| !self.used[w])
            .map(|w| (self.labels.left[v] != self.labels.right[w], w))
            .collect();
        candidates.sort();
        for (rename, w) in candidates {
            if !self.checker.extends(&self.pairs, (v, w)) {
                continue;
            }
            let rename = rename || t1.node_type(v) != t2.node_type(w);
            self.used[w] = true;
            self.pairs.push((v, w));
            self.renames += usize::from(rename);
            self.go(remaining - 1);
            self.renames -= usize::from(rename);
            self.pairs.pop();
            self.used[w] = false;
        }
        self.deleted += 1;
        self.go(remaining - 1);
        self.deleted -= 1;
    }
}
