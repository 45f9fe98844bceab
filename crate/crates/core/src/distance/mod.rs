//! JSON edit distance: the dynamic program over tree and forest distances,
//! with a plain variant and a pruned variant that skips child matchings
//! whose lower bounds show they cannot win.

pub mod matching;

use std::collections::HashMap;

use serde::Serialize;

use crate::tree::{JsonTree, Label, NodeId, NodeType};
pub use matching::{
    aggregate_size_bound, bpm_matching, local_greedy_bound, sed_matching, ChildMatchingProblem,
    GreedyBound,
};

/// Saturating stand-in for an empty minimum.
pub(crate) const INF: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Baseline,
    #[default]
    Quick,
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Engine::Baseline),
            "quick" | "quickjedi" => Ok(Engine::Quick),
            other => Err(format!("unknown engine {other:?} (expected baseline or quick)")),
        }
    }
}

/// How the forest rename case matches children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Baseline,
    Quick,
    /// Always the ordered matching; used on sorted trees.
    Ordered,
}

/// Counters describing how the child matchings were resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MatchingStats {
    /// Node pairs whose forest rename case needed a child matching.
    pub matchings_needed: u64,
    pub sed: u64,
    pub bpm: u64,
    pub aggregate_skips: u64,
    pub greedy_skips: u64,
    pub greedy_exact: u64,
    pub key_shortcuts: u64,
    pub literal_shortcuts: u64,
}

impl MatchingStats {
    pub fn skipped(&self) -> u64 {
        self.aggregate_skips + self.greedy_skips + self.greedy_exact
    }

    /// Fraction of needed matchings that were not run through a kernel.
    pub fn skipped_fraction(&self) -> f64 {
        if self.matchings_needed == 0 {
            0.0
        } else {
            self.skipped() as f64 / self.matchings_needed as f64
        }
    }

    pub fn add(&mut self, other: &MatchingStats) {
        self.matchings_needed += other.matchings_needed;
        self.sed += other.sed;
        self.bpm += other.bpm;
        self.aggregate_skips += other.aggregate_skips;
        self.greedy_skips += other.greedy_skips;
        self.greedy_exact += other.greedy_exact;
        self.key_shortcuts += other.key_shortcuts;
        self.literal_shortcuts += other.literal_shortcuts;
    }
}

/// Label ids shared by two trees, so label equality is an integer compare.
pub(crate) struct LabelIds {
    pub left: Vec<u32>,
    pub right: Vec<u32>,
}

impl LabelIds {
    pub fn new(t1: &JsonTree, t2: &JsonTree) -> Self {
        let mut table: HashMap<(NodeType, &Label), u32> = HashMap::new();
        let mut left = Vec::with_capacity(t1.len());
        let mut right = Vec::with_capacity(t2.len());
        for (tree, out) in [(t1, &mut left), (t2, &mut right)] {
            for v in 0..tree.len() {
                let next = table.len() as u32;
                out.push(*table.entry((tree.node_type(v), tree.label(v))).or_insert(next));
            }
        }
        LabelIds { left, right }
    }

    /// Rename cost for a tree-level rename: 0 same type and label, 1 same
    /// type, 2 (a delete plus an insert) across types.
    pub fn rename_cost(&self, t1: &JsonTree, t2: &JsonTree, v: NodeId, w: NodeId) -> u32 {
        if t1.node_type(v) != t2.node_type(w) {
            2
        } else if self.left[v] == self.right[w] {
            0
        } else {
            1
        }
    }
}

/// Tree (`dt`) and forest (`df`) distance matrices. Index `None` is `ε`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTables {
    cols: usize,
    dt: Vec<u32>,
    df: Vec<u32>,
}

impl DistanceTables {
    fn new(n1: usize, n2: usize) -> Self {
        let cols = n2 + 1;
        DistanceTables {
            cols,
            dt: vec![0; (n1 + 1) * cols],
            df: vec![0; (n1 + 1) * cols],
        }
    }

    #[inline]
    fn at(&self, v: Option<NodeId>, w: Option<NodeId>) -> usize {
        v.map_or(0, |v| v + 1) * self.cols + w.map_or(0, |w| w + 1)
    }

    pub fn rows(&self) -> usize {
        self.dt.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dt(&self, v: Option<NodeId>, w: Option<NodeId>) -> u32 {
        self.dt[self.at(v, w)]
    }

    pub fn df(&self, v: Option<NodeId>, w: Option<NodeId>) -> u32 {
        self.df[self.at(v, w)]
    }

    /// Distance between the two whole trees.
    pub fn distance(&self) -> u32 {
        let n1 = self.rows() - 1;
        let n2 = self.cols - 1;
        self.dt(n1.checked_sub(1), n2.checked_sub(1))
    }
}

/// Reusable per-pair machinery of the dynamic program.
struct Solver<'a> {
    t1: &'a JsonTree,
    t2: &'a JsonTree,
    labels: LabelIds,
    tables: DistanceTables,
    problem: ChildMatchingProblem,
    stats: MatchingStats,
}

impl<'a> Solver<'a> {
    fn new(t1: &'a JsonTree, t2: &'a JsonTree) -> Self {
        let mut tables = DistanceTables::new(t1.len(), t2.len());
        for w in 0..t2.len() {
            let i = tables.at(None, Some(w));
            tables.dt[i] = t2.subtree_size(w) as u32;
            tables.df[i] = t2.desc_count(w) as u32;
        }
        for v in 0..t1.len() {
            let i = tables.at(Some(v), None);
            tables.dt[i] = t1.subtree_size(v) as u32;
            tables.df[i] = t1.desc_count(v) as u32;
        }
        Solver {
            t1,
            t2,
            labels: LabelIds::new(t1, t2),
            tables,
            problem: ChildMatchingProblem::default(),
            stats: MatchingStats::default(),
        }
    }

    fn fill_problem(&mut self, v: NodeId, w: NodeId) {
        let (cv, cw) = (self.t1.children(v), self.t2.children(w));
        let ordered =
            self.t1.node_type(v) == NodeType::Array && self.t2.node_type(w) == NodeType::Array;
        self.problem.reset(cv.len(), cw.len(), ordered);
        for (i, &c) in cv.iter().enumerate() {
            self.problem.set_delete(i, self.tables.dt(Some(c), None));
            for (j, &d) in cw.iter().enumerate() {
                self.problem.set_pair(i, j, self.tables.dt(Some(c), Some(d)));
            }
        }
        for (j, &d) in cw.iter().enumerate() {
            self.problem.set_insert(j, self.tables.dt(None, Some(d)));
        }
    }

    /// Forest rename cost when one side has no children.
    fn leaf_rename(&self, v: NodeId, w: NodeId) -> Option<i64> {
        if self.t1.degree(v) == 0 {
            Some(i64::from(self.tables.df(None, Some(w))))
        } else if self.t2.degree(w) == 0 {
            Some(i64::from(self.tables.df(Some(v), None)))
        } else {
            None
        }
    }

    fn rename_forest(&mut self, mode: Mode, v: NodeId, w: NodeId, ins_f: i64, del_f: i64) -> i64 {
        let (tv, tw) = (self.t1.node_type(v), self.t2.node_type(w));
        if mode == Mode::Quick {
            if tv == NodeType::Literal && tw == NodeType::Literal {
                self.stats.literal_shortcuts += 1;
                return 0;
            }
            if tv == NodeType::Key && tw == NodeType::Key {
                self.stats.key_shortcuts += 1;
                let (c, d) = (self.t1.children(v)[0], self.t2.children(w)[0]);
                return i64::from(self.tables.dt(Some(c), Some(d)));
            }
        }
        if let Some(cost) = self.leaf_rename(v, w) {
            return cost;
        }
        self.stats.matchings_needed += 1;
        let best_other = ins_f.min(del_f);
        match mode {
            Mode::Ordered => {
                self.fill_problem(v, w);
                self.stats.sed += 1;
                i64::from(sed_matching(&self.problem))
            }
            Mode::Baseline => {
                self.fill_problem(v, w);
                if self.problem.ordered {
                    self.stats.sed += 1;
                    i64::from(sed_matching(&self.problem))
                } else {
                    self.stats.bpm += 1;
                    i64::from(bpm_matching(&self.problem))
                }
            }
            Mode::Quick => {
                let bound = aggregate_size_bound(self.t1.sas(v), self.t2.sas(w)) as i64;
                if bound >= best_other {
                    self.stats.aggregate_skips += 1;
                    return INF;
                }
                self.fill_problem(v, w);
                if self.problem.ordered {
                    self.stats.sed += 1;
                    return i64::from(sed_matching(&self.problem));
                }
                let greedy = local_greedy_bound(&self.problem);
                if let Some(exact) = greedy.exact {
                    self.stats.greedy_exact += 1;
                    return i64::from(exact);
                }
                if i64::from(greedy.bound) >= best_other {
                    self.stats.greedy_skips += 1;
                    return INF;
                }
                self.stats.bpm += 1;
                i64::from(bpm_matching(&self.problem))
            }
        }
    }

    fn run(mut self, mode: Mode) -> (DistanceTables, MatchingStats) {
        let (t1, t2) = (self.t1, self.t2);
        for v in 0..t1.len() {
            let dt_v_eps = i64::from(self.tables.dt(Some(v), None));
            let df_v_eps = i64::from(self.tables.df(Some(v), None));
            for w in 0..t2.len() {
                let dt_eps_w = i64::from(self.tables.dt(None, Some(w)));
                let df_eps_w = i64::from(self.tables.df(None, Some(w)));

                let (mut ins_f, mut ins_t) = (INF, INF);
                for &d in t2.children(w) {
                    let f = i64::from(self.tables.df(Some(v), Some(d)))
                        - i64::from(self.tables.df(None, Some(d)));
                    let t = i64::from(self.tables.dt(Some(v), Some(d)))
                        - i64::from(self.tables.dt(None, Some(d)));
                    ins_f = ins_f.min(df_eps_w + f);
                    ins_t = ins_t.min(dt_eps_w + t);
                }
                let (mut del_f, mut del_t) = (INF, INF);
                for &c in t1.children(v) {
                    let f = i64::from(self.tables.df(Some(c), Some(w)))
                        - i64::from(self.tables.df(Some(c), None));
                    let t = i64::from(self.tables.dt(Some(c), Some(w)))
                        - i64::from(self.tables.dt(Some(c), None));
                    del_f = del_f.min(df_v_eps + f);
                    del_t = del_t.min(dt_v_eps + t);
                }
                let ren_f = self.rename_forest(mode, v, w, ins_f, del_f);
                let df = ins_f.min(del_f).min(ren_f);
                let ren_t = df + i64::from(self.labels.rename_cost(t1, t2, v, w));
                let dt = ins_t.min(del_t).min(ren_t);
                debug_assert!(dt < INF && df < INF);
                let i = self.tables.at(Some(v), Some(w));
                self.tables.df[i] = df as u32;
                self.tables.dt[i] = dt as u32;
            }
        }
        (self.tables, self.stats)
    }
}

pub(crate) fn compute_tables(
    t1: &JsonTree,
    t2: &JsonTree,
    mode: Mode,
) -> (DistanceTables, MatchingStats) {
    Solver::new(t1, t2).run(mode)
}

/// Full distance matrices from the chosen engine.
pub fn distance_tables(t1: &JsonTree, t2: &JsonTree, engine: Engine) -> DistanceTables {
    let mode = match engine {
        Engine::Baseline => Mode::Baseline,
        Engine::Quick => Mode::Quick,
    };
    compute_tables(t1, t2, mode).0
}

/// JSON edit distance with the unpruned dynamic program.
pub fn jedi_baseline(t1: &JsonTree, t2: &JsonTree) -> usize {
    jedi_with_stats(t1, t2, Engine::Baseline).0
}

/// JSON edit distance with bound-based matching skips. Same value as
/// [`jedi_baseline`].
pub fn quickjedi(t1: &JsonTree, t2: &JsonTree) -> usize {
    jedi_with_stats(t1, t2, Engine::Quick).0
}

pub fn jedi(t1: &JsonTree, t2: &JsonTree, engine: Engine) -> usize {
    jedi_with_stats(t1, t2, engine).0
}

pub fn jedi_with_stats(t1: &JsonTree, t2: &JsonTree, engine: Engine) -> (usize, MatchingStats) {
    if t1.is_empty() || t2.is_empty() {
        return (t1.len() + t2.len(), MatchingStats::default());
    }
    let mode = match engine {
        Engine::Baseline => Mode::Baseline,
        Engine::Quick => Mode::Quick,
    };
    let (tables, stats) = compute_tables(t1, t2, mode);
    (tables.distance() as usize, stats)
}

/// Outcome of re-deriving every child matching of a pair exactly and
/// checking each bound against it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundAudit {
    pub pairs_checked: u64,
    pub array_pairs_checked: u64,
    pub aggregate_violations: u64,
    pub greedy_violations: u64,
    pub greedy_exact_violations: u64,
    pub ordered_violations: u64,
    /// Pruned and unpruned tables differ somewhere.
    pub table_mismatch: bool,
}

impl BoundAudit {
    pub fn violations(&self) -> u64 {
        self.aggregate_violations
            + self.greedy_violations
            + self.greedy_exact_violations
            + self.ordered_violations
            + u64::from(self.table_mismatch)
    }
}

/// Checks, on every pair of internal nodes, that the aggregate size and
/// greedy bounds do not exceed the exact unordered matching, which in turn
/// does not exceed the ordered one; and that pruning leaves every table
/// entry unchanged.
pub fn audit_bounds(t1: &JsonTree, t2: &JsonTree) -> BoundAudit {
    let mut audit = BoundAudit::default();
    if t1.is_empty() || t2.is_empty() {
        return audit;
    }
    let (exact, _) = compute_tables(t1, t2, Mode::Baseline);
    let (pruned, _) = compute_tables(t1, t2, Mode::Quick);
    audit.table_mismatch = exact != pruned;

    let mut solver = Solver::new(t1, t2);
    solver.tables = exact;
    for v in 0..t1.len() {
        if t1.degree(v) == 0 {
            continue;
        }
        for w in 0..t2.len() {
            if t2.degree(w) == 0 {
                continue;
            }
            solver.fill_problem(v, w);
            let bpm = bpm_matching(&solver.problem);
            audit.pairs_checked += 1;
            if aggregate_size_bound(t1.sas(v), t2.sas(w)) > bpm as usize {
                audit.aggregate_violations += 1;
            }
            let greedy = local_greedy_bound(&solver.problem);
            if greedy.bound > bpm {
                audit.greedy_violations += 1;
            }
            if greedy.exact.is_some_and(|e| e != bpm) {
                audit.greedy_exact_violations += 1;
            }
            if solver.problem.ordered {
                audit.array_pairs_checked += 1;
                if bpm > sed_matching(&solver.problem) {
                    audit.ordered_violations += 1;
                }
            }
        }
    }
    audit
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::tree::parse_document;

    pub(crate) const MOVIE_A: &str = r#"{"title": "Star Wars - A New Hope", "running time": 125, "cast": {"Han": "Ford", "Leia": "Fisher"}}"#;
    pub(crate) const MOVIE_B: &str = r#"{"cast": ["Ford", "Fisher"], "running time": 125, "name": "Star Wars - A New Hope"}"#;

    fn movie_pair() -> (JsonTree, JsonTree) {
        (parse_document(MOVIE_A).unwrap(), parse_document(MOVIE_B).unwrap())
    }

    #[test]
    fn movie_pair_distance() {
        let (t1, t2) = movie_pair();
        assert_eq!(jedi_baseline(&t1, &t2), 5);
        assert_eq!(quickjedi(&t1, &t2), 5);
        assert_eq!(quickjedi(&t2, &t1), 5);
    }

    #[test]
    fn cast_subtree_deletion_cost() {
        let (t1, t2) = movie_pair();
        let tables = distance_tables(&t1, &t2, Engine::Baseline);
        let cast = (0..t1.len()).find(|&v| t1.node(v).key() == Some("cast")).unwrap();
        assert_eq!(tables.dt(Some(cast), None), 6);
        assert_eq!(tables.df(Some(cast), None), 5);
        assert_eq!(tables.dt(None, None), 0);
    }

    #[test]
    fn root_matching_values() {
        let (t1, t2) = movie_pair();
        let tables = distance_tables(&t1, &t2, Engine::Baseline);
        let mut solver = Solver::new(&t1, &t2);
        solver.tables = tables;
        solver.fill_problem(t1.root(), t2.root());
        assert_eq!(bpm_matching(&solver.problem), 5);
        assert_eq!(aggregate_size_bound(t1.sas(t1.root()), t2.sas(t2.root())), 2);
    }

    #[test]
    fn identity_and_empty() {
        let (t1, _) = movie_pair();
        assert_eq!(quickjedi(&t1, &t1), 0);
        assert_eq!(jedi_baseline(&t1, &t1), 0);
        assert_eq!(quickjedi(&t1, &JsonTree::empty()), 11);
        assert_eq!(jedi_baseline(&JsonTree::empty(), &t1), 11);
    }

    #[test]
    fn table_invariants() {
        let (t1, t2) = movie_pair();
        let tables = distance_tables(&t1, &t2, Engine::Quick);
        for v in 0..t1.len() {
            assert_eq!(tables.dt(Some(v), None), tables.df(Some(v), None) + 1);
            for w in 0..t2.len() {
                let dt = tables.dt(Some(v), Some(w));
                let df = tables.df(Some(v), Some(w));
                assert!(dt <= df + 2);
                let a = tables.dt(Some(v), None) as i64;
                let b = tables.dt(None, Some(w)) as i64;
                assert!(dt as i64 >= (a - b).abs());
            }
        }
    }

    #[test]
    fn small_cases() {
        let p = |s| parse_document(s).unwrap();
        assert_eq!(quickjedi(&p("1"), &p("2")), 1);
        assert_eq!(quickjedi(&p("1"), &p("1.0")), 0);
        assert_eq!(quickjedi(&p("1"), &p("[]")), 2);
        assert_eq!(quickjedi(&p(r#"{"a":1}"#), &p(r#"{"b":1}"#)), 1);
        assert_eq!(quickjedi(&p(r#"{"a":1,"b":2}"#), &p(r#"{"b":2,"a":1}"#)), 0);
        assert_eq!(quickjedi(&p("[1,2]"), &p("[2,1]")), 2);
        assert_eq!(quickjedi(&p(r#"{"a":1,"b":2}"#), &p(r#"{"a":1}"#)), 2);
        assert_eq!(quickjedi(&p(r#"{"a":[["A"]]}"#), &p(r#""A""#)), 4);
    }

    #[test]
    fn audit_on_movie_pair() {
        let (t1, t2) = movie_pair();
        let audit = audit_bounds(&t1, &t2);
        assert!(audit.pairs_checked > 0);
        assert_eq!(audit.violations(), 0, "{audit:?}");
    }

    #[test]
    fn stats_count_shortcuts() {
        let (t1, t2) = movie_pair();
        let (_, stats) = jedi_with_stats(&t1, &t2, Engine::Quick);
        assert!(stats.key_shortcuts > 0);
        assert!(stats.literal_shortcuts > 0);
        let (_, base) = jedi_with_stats(&t1, &t2, Engine::Baseline);
        assert_eq!(base.skipped(), 0);
        assert_eq!(base.key_shortcuts, 0);
    }
}
