//! Four-level search tree over node signatures for threshold lookups.
//!
//! Every node of every indexed tree is stored along a path
//! `label → descendant count → ancestor count → left-right count`, ending
//! in a sorted posting list of tree ids. A lookup probes `τ + 1` query
//! nodes: any tree within distance `τ` must map at least one of them to a
//! node with the same label, and the three region counts of that pair can
//! differ by at most `τ` in total.

mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Bound;

use serde::Serialize;
use thiserror::Error;

use crate::tree::{JsonTree, Label, LabelKey, NodeId, NodeType};

pub use snapshot::{SnapshotError, SNAPSHOT_VERSION};

pub type TreeId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("tree id {0} is already indexed")]
    DuplicateId(TreeId),
}

type LrLevel = BTreeMap<u32, Vec<TreeId>>;
type AncLevel = BTreeMap<u32, LrLevel>;
type DescLevel = BTreeMap<u32, AncLevel>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct LabelEntry {
    /// Number of indexed nodes carrying this label.
    pub freq: u64,
    pub by_desc: DescLevel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JsimIndex {
    pub(crate) labels: BTreeMap<LabelKey, LabelEntry>,
    pub(crate) trees: BTreeSet<TreeId>,
    pub(crate) tombstones: BTreeSet<TreeId>,
    pub(crate) node_count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub trees: u64,
    pub removed: u64,
    pub nodes: u64,
    pub labels: u64,
    pub desc_keys: u64,
    pub anc_keys: u64,
    pub lr_keys: u64,
    pub postings: u64,
}

impl IndexStats {
    /// Map entries at all four levels plus posting list entries.
    pub fn entries(&self) -> u64 {
        self.labels + self.desc_keys + self.anc_keys + self.lr_keys + self.postings
    }
}

/// Keys visited and skipped per level during a lookup.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LevelCounters {
    pub explored: [u64; 3],
    pub pruned: [u64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CandidateSet {
    /// Sorted, deduplicated.
    pub ids: Vec<TreeId>,
    pub probes: Vec<NodeId>,
    pub counters: LevelCounters,
}

impl CandidateSet {
    pub fn contains(&self, id: TreeId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn window(center: u32, radius: usize) -> (Bound<u32>, Bound<u32>) {
    let r = u32::try_from(radius).unwrap_or(u32::MAX);
    (
        Bound::Included(center.saturating_sub(r)),
        Bound::Included(center.saturating_add(r)),
    )
}

impl JsimIndex {
    pub fn new() -> Self {
        JsimIndex::default()
    }

    pub fn insert(&mut self, id: TreeId, t: &JsonTree) -> Result<(), IndexError> {
        if !self.trees.insert(id) {
            return Err(IndexError::DuplicateId(id));
        }
        for v in 0..t.len() {
            let entry = self.labels.entry(t.label_key(v)).or_default();
            entry.freq += 1;
            let list = entry
                .by_desc
                .entry(t.desc_count(v) as u32)
                .or_default()
                .entry(t.anc_count(v) as u32)
                .or_default()
                .entry(t.lr_count(v) as u32)
                .or_default();
            if let Err(pos) = list.binary_search(&id) {
                list.insert(pos, id);
            }
        }
        self.node_count += t.len() as u64;
        Ok(())
    }

    /// Hides `id` from lookups. Returns false if it was not indexed.
    pub fn remove(&mut self, id: TreeId) -> bool {
        self.trees.contains(&id) && self.tombstones.insert(id)
    }

    /// Drops removed ids from the posting lists and prunes empty branches.
    /// Label frequencies keep counting removed trees.
    pub fn compact(&mut self) {
        let dead = std::mem::take(&mut self.tombstones);
        if dead.is_empty() {
            return;
        }
        for entry in self.labels.values_mut() {
            entry.by_desc.retain(|_, anc| {
                anc.retain(|_, lr| {
                    lr.retain(|_, list| {
                        list.retain(|id| !dead.contains(id));
                        !list.is_empty()
                    });
                    !lr.is_empty()
                });
                !anc.is_empty()
            });
        }
        for id in dead {
            self.trees.remove(&id);
        }
    }

    pub fn contains(&self, id: TreeId) -> bool {
        self.trees.contains(&id) && !self.tombstones.contains(&id)
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len() - self.tombstones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree_count() == 0
    }

    pub fn label_frequency(&self, key: &LabelKey) -> u64 {
        self.labels.get(key).map_or(0, |e| e.freq)
    }

    pub fn stats(&self) -> IndexStats {
        let mut s = IndexStats {
            trees: self.trees.len() as u64,
            removed: self.tombstones.len() as u64,
            nodes: self.node_count,
            labels: self.labels.len() as u64,
            ..IndexStats::default()
        };
        for entry in self.labels.values() {
            s.desc_keys += entry.by_desc.len() as u64;
            for anc in entry.by_desc.values() {
                s.anc_keys += anc.len() as u64;
                for lr in anc.values() {
                    s.lr_keys += lr.len() as u64;
                    s.postings += lr.values().map(|l| l.len() as u64).sum::<u64>();
                }
            }
        }
        s
    }

    /// Up to `τ + 1` query nodes, rarest labels first.
    pub fn select_probe_nodes(&self, tq: &JsonTree, tau: usize) -> Vec<NodeId> {
        select_probe_nodes(tq, tau, |k| self.label_frequency(k))
    }

    /// Every indexed tree that may lie within distance `tau` of `tq`.
    pub fn lookup(&self, tq: &JsonTree, tau: usize) -> CandidateSet {
        let probes = self.select_probe_nodes(tq, tau);
        self.lookup_with_probes(tq, &probes, tau)
    }

    /// Lookup with a caller-chosen probe set. Completeness needs at least
    /// `min(τ + 1, |tq|)` distinct probes.
    pub fn lookup_with_probes(&self, tq: &JsonTree, probes: &[NodeId], tau: usize) -> CandidateSet {
        let mut counters = LevelCounters::default();
        let mut found: BTreeSet<TreeId> = BTreeSet::new();
        for &v in probes {
            let Some(entry) = self.labels.get(&tq.label_key(v)) else {
                continue;
            };
            let (desc, anc, lr) = (
                tq.desc_count(v) as u32,
                tq.anc_count(v) as u32,
                tq.lr_count(v) as u32,
            );
            let mut seen = 0;
            for (&kd, anc_level) in entry.by_desc.range(window(desc, tau)) {
                seen += 1;
                let tau_anc = tau - desc.abs_diff(kd) as usize;
                let mut seen_anc = 0;
                for (&ka, lr_level) in anc_level.range(window(anc, tau_anc)) {
                    seen_anc += 1;
                    let tau_lr = tau_anc - anc.abs_diff(ka) as usize;
                    let mut seen_lr = 0;
                    for (_, list) in lr_level.range(window(lr, tau_lr)) {
                        seen_lr += 1;
                        found.extend(list.iter().copied().filter(|id| !self.tombstones.contains(id)));
                    }
                    counters.explored[2] += seen_lr;
                    counters.pruned[2] += lr_level.len() as u64 - seen_lr;
                }
                counters.explored[1] += seen_anc;
                counters.pruned[1] += anc_level.len() as u64 - seen_anc;
            }
            counters.explored[0] += seen;
            counters.pruned[0] += entry.by_desc.len() as u64 - seen;
        }
        CandidateSet {
            ids: found.into_iter().collect(),
            probes: probes.to_vec(),
            counters,
        }
    }

    pub fn save(&self) -> Vec<u8> {
        snapshot::encode(self)
    }

    pub fn load(bytes: &[u8]) -> Result<Self, SnapshotError> {
        snapshot::decode(bytes)
    }
}

/// `min(τ + 1, |tq|)` distinct nodes of `tq`, by ascending label frequency
/// and then postorder.
pub fn select_probe_nodes(tq: &JsonTree, tau: usize, freq: impl Fn(&LabelKey) -> u64) -> Vec<NodeId> {
    let mut nodes: Vec<(u64, NodeId)> = (0..tq.len()).map(|v| (freq(&tq.label_key(v)), v)).collect();
    nodes.sort_unstable();
    nodes
        .into_iter()
        .take(tau.saturating_add(1))
        .map(|(_, v)| v)
        .collect()
}

/// Lower bound on JEDI from the label bags of the two trees:
/// `max(|T1|, |T2|) - |bag(T1) ∩ bag(T2)|`.
pub fn label_intersection_bound(t1: &JsonTree, t2: &JsonTree) -> usize {
    let mut bag: HashMap<(NodeType, &Label), usize> = HashMap::new();
    for v in 0..t1.len() {
        *bag.entry((t1.node_type(v), t1.label(v))).or_default() += 1;
    }
    let mut common = 0;
    for w in 0..t2.len() {
        if let Some(c) = bag.get_mut(&(t2.node_type(w), t2.label(w))) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    t1.len().max(t2.len()) - common
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_document;

    const MOVIE_A: &str = r#"{"title": "Star Wars - A New Hope", "running time": 125, "cast": {"Han": "Ford", "Leia": "Fisher"}}"#;
    const MOVIE_B: &str = r#"{"cast": ["Ford", "Fisher"], "running time": 125, "name": "Star Wars - A New Hope"}"#;

    fn p(s: &str) -> JsonTree {
        parse_document(s).unwrap()
    }

    fn paths(idx: &JsimIndex) -> Vec<(LabelKey, u32, u32, u32, Vec<TreeId>)> {
        let mut out = Vec::new();
        for (k, e) in &idx.labels {
            for (&d, anc) in &e.by_desc {
                for (&a, lr) in anc {
                    for (&l, ids) in lr {
                        out.push((k.clone(), d, a, l, ids.clone()));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn insert_creates_signature_paths() {
        let mut idx = JsimIndex::new();
        idx.insert(1, &p(MOVIE_A)).unwrap();
        let key = LabelKey::new(NodeType::Key, Label::Key("running time".into()));
        let e = &idx.labels[&key];
        assert_eq!(e.by_desc[&1][&1][&8], vec![1]);
        assert_eq!(idx.insert(1, &p("1")), Err(IndexError::DuplicateId(1)));
    }

    #[test]
    fn singleton_tree_single_path() {
        let mut idx = JsimIndex::new();
        idx.insert(0, &p(r#""A""#)).unwrap();
        let all = paths(&idx);
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].1, all[0].2, all[0].3), (0, 0, 0));
        assert_eq!(all[0].0.node_type, NodeType::Literal);
    }

    #[test]
    fn same_tree_twice() {
        let mut idx = JsimIndex::new();
        let t = p(MOVIE_B);
        idx.insert(4, &t).unwrap();
        idx.insert(2, &t).unwrap();
        for path in paths(&idx) {
            assert_eq!(path.4, vec![2, 4]);
        }
        let s = idx.stats();
        assert!(s.entries() <= 5 * 2 * t.len() as u64);
    }

    #[test]
    fn probe_selection() {
        let t = p(MOVIE_A);
        assert_eq!(select_probe_nodes(&t, 0, |_| 0).len(), 1);
        assert_eq!(select_probe_nodes(&t, 11, |_| 0).len(), 11);
        assert_eq!(select_probe_nodes(&t, 50, |_| 0).len(), 11);
        let rare = LabelKey::new(NodeType::Key, Label::Key("Leia".into()));
        let probes = select_probe_nodes(&t, 2, |k| if *k == rare { 1 } else { 5 });
        assert_eq!(t.node(probes[0]).key(), Some("Leia"));
    }

    #[test]
    fn label_bound_examples() {
        let (a, b) = (p(MOVIE_A), p(MOVIE_B));
        assert_eq!(label_intersection_bound(&a, &b), 4);
        assert_eq!(label_intersection_bound(&a, &a), 0);
        assert_eq!(label_intersection_bound(&p("[1]"), &p(r#"{"x": "y"}"#)), 3);
    }

    #[test]
    fn removal_hides_and_compacts() {
        let mut idx = JsimIndex::new();
        let t = p(MOVIE_B);
        idx.insert(0, &t).unwrap();
        idx.insert(1, &t).unwrap();
        assert!(idx.remove(0));
        assert!(!idx.remove(0));
        assert!(!idx.remove(9));
        assert_eq!(idx.lookup(&t, 0).ids, vec![1]);
        let before = idx.lookup(&t, 3).ids;
        idx.compact();
        assert_eq!(idx.lookup(&t, 3).ids, before);
        assert!(!idx.contains(0));
        assert_eq!(idx.tree_count(), 1);
    }

    #[test]
    fn saturated_tau_returns_label_sharing_trees() {
        let mut idx = JsimIndex::new();
        idx.insert(0, &p(MOVIE_A)).unwrap();
        idx.insert(1, &p(MOVIE_B)).unwrap();
        idx.insert(2, &p(r#"[true, false]"#)).unwrap();
        let q = p(r#"{"cast": 1}"#);
        let c = idx.lookup(&q, 100);
        assert_eq!(c.ids, vec![0, 1]);
    }
}
