//! Seeded synthetic corpora with planted near-duplicates.
//!
//! All randomness comes from ChaCha8 seeded with a `u64`, so a corpus is a
//! pure function of `(n, profile, seed)`.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::index::TreeId;
use crate::tree::{JsonTree, Label, Literal, NodeType, Number, RawNode, RawTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Root objects with 50 to 80 members.
    FlatWide,
    /// Nesting around eleven levels deep.
    Deep,
    /// Mostly arrays of literals and arrays.
    ArrayHeavy,
    Mixed,
}

impl Profile {
    pub const ALL: [Profile; 4] = [
        Profile::FlatWide,
        Profile::Deep,
        Profile::ArrayHeavy,
        Profile::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::FlatWide => "flat-wide",
            Profile::Deep => "deep",
            Profile::ArrayHeavy => "array-heavy",
            Profile::Mixed => "mixed",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown profile {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    RenameKey,
    ChangeLiteral,
    /// Removes a member whose value is a literal.
    DeleteMember,
    ReorderMembers,
}

impl Perturbation {
    /// Cost of one application; the distance to the source is at most the
    /// sum over all applied perturbations.
    pub fn budget(self) -> usize {
        match self {
            Perturbation::RenameKey | Perturbation::ChangeLiteral => 1,
            Perturbation::DeleteMember => 2,
            Perturbation::ReorderMembers => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlantedDuplicate {
    pub id: TreeId,
    pub source: TreeId,
    pub perturbations: Vec<Perturbation>,
    /// Upper bound on the distance to the source.
    pub budget: usize,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub profile: Profile,
    pub seed: u64,
    /// One JSON document per entry; the id is the position.
    pub documents: Vec<String>,
    pub planted: Vec<PlantedDuplicate>,
}

impl SynthCorpus {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.documents {
            out.push_str(d);
            out.push('\n');
        }
        out
    }
}

/// Document under construction.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Doc {
    Object(Vec<(String, Doc)>),
    Array(Vec<Doc>),
    Literal(Literal),
}

impl Doc {
    pub fn to_tree(&self) -> JsonTree {
        let mut raw = RawTree::default();
        fn add(raw: &mut RawTree, node_type: NodeType, label: Label) -> usize {
            raw.nodes.push(RawNode {
                node_type,
                label,
                children: Vec::new(),
            });
            raw.nodes.len() - 1
        }
        let mut stack: Vec<(&Doc, Option<usize>)> = vec![(self, None)];
        while let Some((doc, parent)) = stack.pop() {
            let id = match doc {
                Doc::Object(_) => add(&mut raw, NodeType::Object, Label::Null),
                Doc::Array(_) => add(&mut raw, NodeType::Array, Label::Null),
                Doc::Literal(l) => add(&mut raw, NodeType::Literal, Label::Literal(l.clone())),
            };
            if let Some(p) = parent {
                raw.nodes[p].children.push(id);
            }
            match doc {
                Doc::Object(members) => {
                    // keys are created now so member order is preserved
                    let keys: Vec<usize> = members
                        .iter()
                        .map(|(k, _)| {
                            let key = add(&mut raw, NodeType::Key, Label::Key(k.clone()));
                            raw.nodes[id].children.push(key);
                            key
                        })
                        .collect();
                    for ((_, v), key) in members.iter().zip(keys).rev() {
                        stack.push((v, Some(key)));
                    }
                }
                Doc::Array(items) => {
                    // children are attached when popped, so push in reverse
                    for item in items.iter().rev() {
                        stack.push((item, Some(id)));
                    }
                }
                Doc::Literal(_) => {}
            }
        }
        JsonTree::from_raw(&raw)
    }

    fn count(&self, pred: &dyn Fn(&Doc) -> bool) -> usize {
        let own = usize::from(pred(self));
        own + match self {
            Doc::Object(m) => m.iter().map(|(_, v)| v.count(pred)).sum(),
            Doc::Array(items) => items.iter().map(|v| v.count(pred)).sum(),
            Doc::Literal(_) => 0,
        }
    }

    /// Applies `f` to the `k`-th node (preorder) satisfying `pred`.
    fn visit_nth(&mut self, pred: &dyn Fn(&Doc) -> bool, k: &mut usize, f: &mut dyn FnMut(&mut Doc)) -> bool {
        if pred(self) {
            if *k == 0 {
                f(self);
                return true;
            }
            *k -= 1;
        }
        match self {
            Doc::Object(m) => m.iter_mut().any(|(_, v)| v.visit_nth(pred, k, f)),
            Doc::Array(items) => items.iter_mut().any(|v| v.visit_nth(pred, k, f)),
            Doc::Literal(_) => false,
        }
    }
}

const WORDS: &[&str] = &[
    "id", "name", "title", "author", "date", "score", "tags", "body", "url", "type", "count",
    "kind", "parent", "children", "created", "updated", "status", "owner", "label", "value",
    "items", "meta", "version", "source", "target", "weight", "color", "size", "lang", "text",
];

struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    fn key(&mut self) -> String {
        if self.rng.gen_bool(0.7) {
            WORDS[self.rng.gen_range(0..WORDS.len())].to_string()
        } else {
            format!("k{}", self.rng.gen_range(0..400))
        }
    }

    fn literal(&mut self) -> Literal {
        match self.rng.gen_range(0..10) {
            0 => Literal::Null,
            1 => Literal::Bool(self.rng.gen()),
            2..=5 => Literal::Number(Number::from_i64(self.rng.gen_range(-50..1000))),
            _ => {
                let w = WORDS[self.rng.gen_range(0..WORDS.len())];
                Literal::String(format!("{w}-{}", self.rng.gen_range(0..200)))
            }
        }
    }

    fn object(&mut self, members: usize, mut value: impl FnMut(&mut Self) -> Doc) -> Doc {
        let mut out: Vec<(String, Doc)> = Vec::with_capacity(members);
        while out.len() < members {
            let k = self.key();
            if out.iter().any(|(e, _)| *e == k) {
                continue;
            }
            let v = value(self);
            out.push((k, v));
        }
        Doc::Object(out)
    }

    fn literal_array(&mut self, lo: usize, hi: usize) -> Doc {
        let n = self.rng.gen_range(lo..=hi);
        Doc::Array((0..n).map(|_| Doc::Literal(self.literal())).collect())
    }

    fn small_value(&mut self) -> Doc {
        match self.rng.gen_range(0..10) {
            0 => self.literal_array(1, 4),
            1 => {
                let n = self.rng.gen_range(1..=4);
                self.object(n, |g| Doc::Literal(g.literal()))
            }
            _ => Doc::Literal(self.literal()),
        }
    }

    fn deep(&mut self, depth: usize) -> Doc {
        if depth == 0 {
            return Doc::Literal(self.literal());
        }
        let width = self.rng.gen_range(1..=3);
        let spine = self.rng.gen_range(0..width);
        let child = |g: &mut Self, i: usize| {
            if i == spine {
                g.deep(depth - 1)
            } else {
                g.small_value()
            }
        };
        if self.rng.gen_bool(0.6) {
            let mut i = 0;
            self.object(width, |g| {
                i += 1;
                child(g, i - 1)
            })
        } else {
            Doc::Array((0..width).map(|i| child(self, i)).collect())
        }
    }

    fn array_heavy(&mut self, depth: usize) -> Doc {
        let n = self.rng.gen_range(2..=8);
        Doc::Array(
            (0..n)
                .map(|_| match self.rng.gen_range(0..10) {
                    0..=3 if depth < 3 => self.array_heavy(depth + 1),
                    0..=4 => self.literal_array(1, 6),
                    5 => {
                        let m = self.rng.gen_range(1..=3);
                        self.object(m, |g| g.literal_array(0, 4))
                    }
                    _ => Doc::Literal(self.literal()),
                })
                .collect(),
        )
    }

    fn mixed(&mut self, depth: usize) -> Doc {
        let roll = if depth == 0 { self.rng.gen_range(0..6) } else { self.rng.gen_range(0..10) };
        match roll {
            0..=2 if depth < 5 => {
                let n = self.rng.gen_range(1..=6);
                self.object(n, |g| g.mixed(depth + 1))
            }
            3..=5 if depth < 5 => {
                let n = self.rng.gen_range(1..=5);
                Doc::Array((0..n).map(|_| self.mixed(depth + 1)).collect())
            }
            _ => Doc::Literal(self.literal()),
        }
    }

    fn document(&mut self, profile: Profile) -> Doc {
        match profile {
            Profile::FlatWide => {
                let n = self.rng.gen_range(50..=80);
                self.object(n, |g| g.small_value())
            }
            Profile::Deep => {
                let depth = self.rng.gen_range(9..=12);
                self.deep(depth)
            }
            Profile::ArrayHeavy => self.array_heavy(0),
            Profile::Mixed => self.mixed(0),
        }
    }

    /// A document of exactly `size` tree nodes.
    fn sized(&mut self, size: usize) -> Doc {
        debug_assert!(size >= 1);
        if size == 1 {
            return Doc::Literal(self.literal());
        }
        let rest = size - 1;
        if rest >= 2 && self.rng.gen_bool(0.5) {
            // members need a key node each, values at least one node
            let members = self.rng.gen_range(1..=8).min(rest / 2);
            let sizes = self.split(rest - members, members);
            let mut i = 0;
            return self.object(members, |g| {
                i += 1;
                g.sized(sizes[i - 1])
            });
        }
        let items = self.rng.gen_range(1..=8).min(rest);
        let sizes = self.split(rest, items);
        Doc::Array(sizes.into_iter().map(|s| self.sized(s)).collect())
    }

    /// Random composition of `total` into `parts` positive sizes.
    fn split(&mut self, total: usize, parts: usize) -> Vec<usize> {
        let mut cuts: Vec<usize> = index::sample(&mut self.rng, total - 1, parts - 1)
            .into_iter()
            .map(|c| c + 1)
            .collect();
        cuts.sort_unstable();
        cuts.push(total);
        let mut prev = 0;
        cuts.into_iter()
            .map(|c| {
                let s = c - prev;
                prev = c;
                s
            })
            .collect()
    }

    fn perturb(&mut self, doc: &mut Doc, kind: Perturbation) -> bool {
        let is_object = |d: &Doc| matches!(d, Doc::Object(m) if !m.is_empty());
        let with_literal_member =
            |d: &Doc| matches!(d, Doc::Object(m) if m.iter().any(|(_, v)| matches!(v, Doc::Literal(_))));
        let is_reorderable = |d: &Doc| matches!(d, Doc::Object(m) if m.len() >= 2);
        let is_literal = |d: &Doc| matches!(d, Doc::Literal(_));
        let pred: &dyn Fn(&Doc) -> bool = match kind {
            Perturbation::RenameKey => &is_object,
            Perturbation::ChangeLiteral => &is_literal,
            Perturbation::DeleteMember => &with_literal_member,
            Perturbation::ReorderMembers => &is_reorderable,
        };
        let n = doc.count(pred);
        if n == 0 {
            return false;
        }
        let mut k = self.rng.gen_range(0..n);
        let rng = &mut self.rng;
        doc.visit_nth(pred, &mut k, &mut |d| match (kind, d) {
            (Perturbation::RenameKey, Doc::Object(m)) => {
                let i = rng.gen_range(0..m.len());
                let mut fresh = format!("{}~", m[i].0);
                while m.iter().any(|(k, _)| *k == fresh) {
                    fresh.push('~');
                }
                m[i].0 = fresh;
            }
            (Perturbation::ChangeLiteral, Doc::Literal(l)) => {
                *l = match l {
                    Literal::Null => Literal::Bool(true),
                    Literal::Bool(b) => Literal::Bool(!*b),
                    Literal::Number(_) => Literal::Number(Number::from_i64(rng.gen_range(1000..2000))),
                    Literal::String(s) => Literal::String(format!("{s}*")),
                };
            }
            (Perturbation::DeleteMember, Doc::Object(m)) => {
                let lits: Vec<usize> = (0..m.len())
                    .filter(|&i| matches!(m[i].1, Doc::Literal(_)))
                    .collect();
                m.remove(lits[rng.gen_range(0..lits.len())]);
            }
            (Perturbation::ReorderMembers, Doc::Object(m)) => {
                let before: Vec<String> = m.iter().map(|(k, _)| k.clone()).collect();
                while m.iter().map(|(k, _)| k).eq(before.iter()) {
                    m.shuffle(rng);
                }
            }
            _ => unreachable!("predicate selects matching nodes"),
        })
    }
}

/// `n` documents of the given profile. About a fifth of them (after the
/// first) are perturbed copies of an earlier document.
pub fn synth_corpus(n: usize, profile: Profile, seed: u64) -> SynthCorpus {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut docs: Vec<Doc> = Vec::with_capacity(n);
    let mut planted = Vec::new();
    for id in 0..n {
        if id > 0 && g.rng.gen_bool(0.2) {
            let source = g.rng.gen_range(0..id);
            let mut doc = docs[source].clone();
            let ops = g.rng.gen_range(1..=3);
            let mut applied = Vec::new();
            for _ in 0..ops {
                let kind = [
                    Perturbation::RenameKey,
                    Perturbation::ChangeLiteral,
                    Perturbation::DeleteMember,
                    Perturbation::ReorderMembers,
                ][g.rng.gen_range(0..4)];
                if g.perturb(&mut doc, kind) {
                    applied.push(kind);
                }
            }
            if !applied.is_empty() {
                planted.push(PlantedDuplicate {
                    id: id as TreeId,
                    source: source as TreeId,
                    budget: applied.iter().map(|p| p.budget()).sum(),
                    perturbations: applied,
                });
            }
            docs.push(doc);
        } else {
            let doc = g.document(profile);
            docs.push(doc);
        }
    }
    SynthCorpus {
        profile,
        seed,
        documents: docs.iter().map(|d| d.to_tree().to_json()).collect(),
        planted,
    }
}

/// One document of the given profile.
pub fn synth_tree(profile: Profile, seed: u64) -> JsonTree {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    g.document(profile).to_tree()
}

/// A document with exactly `size` nodes.
pub fn synth_sized_tree(size: usize, seed: u64) -> JsonTree {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    g.sized(size.max(1)).to_tree()
}

/// A copy of `t` with `edits` literal changes and key renames applied at
/// random positions; the distance to `t` is at most `edits`.
pub fn perturb_tree(t: &JsonTree, edits: usize, seed: u64) -> JsonTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = t.to_raw();
    let candidates: Vec<usize> = (0..raw.nodes.len())
        .filter(|&v| matches!(raw.nodes[v].node_type, NodeType::Literal))
        .collect();
    for &v in candidates.choose_multiple(&mut rng, edits) {
        raw.nodes[v].label = Label::Literal(Literal::String(format!("edit-{v}")));
    }
    JsonTree::from_raw(&raw)
}

/// `t` with the members of every object shuffled.
pub fn reorder_members(t: &JsonTree, seed: u64) -> JsonTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = t.to_raw();
    for node in raw.nodes.iter_mut() {
        if node.node_type == NodeType::Object {
            node.children.shuffle(&mut rng);
        }
    }
    JsonTree::from_raw(&raw)
}

/// Random small tree for property tests: at most `max_nodes` nodes with a
/// mix of all node types and a small label alphabet so that labels repeat.
pub fn random_small_tree(rng: &mut impl Rng, max_nodes: usize) -> JsonTree {
    let target = rng.gen_range(1..=max_nodes.max(1));
    let mut raw = RawTree::default();
    let lit = |rng: &mut dyn rand::RngCore| -> Label {
        match rng.gen_range(0..5) {
            0 => Label::Literal(Literal::Null),
            1 => Label::Literal(Literal::Bool(rng.gen())),
            2 | 3 => Label::Literal(Literal::Number(Number::from_i64(rng.gen_range(0..3)))),
            _ => Label::Literal(Literal::String(["a", "b"][rng.gen_range(0..2)].into())),
        }
    };
    raw.nodes.push(RawNode {
        node_type: if target == 1 {
            NodeType::Literal
        } else if rng.gen_bool(0.5) {
            NodeType::Object
        } else {
            NodeType::Array
        },
        label: Label::Null,
        children: Vec::new(),
    });
    if target == 1 {
        raw.nodes[0].label = lit(rng);
        return JsonTree::from_raw(&raw);
    }
    // grow by attaching values to containers while the budget allows
    let mut containers = vec![0usize];
    let mut size = 1;
    while size < target {
        let room = target - size;
        let p = containers[rng.gen_range(0..containers.len())];
        let is_object = raw.nodes[p].node_type == NodeType::Object;
        let needed = if is_object { 2 } else { 1 };
        if room < needed {
            if containers.iter().all(|&c| raw.nodes[c].node_type == NodeType::Object) {
                break;
            }
            continue;
        }
        let parent = if is_object {
            let taken: Vec<String> = raw.nodes[p]
                .children
                .iter()
                .filter_map(|&k| match &raw.nodes[k].label {
                    Label::Key(s) => Some(s.clone()),
                    _ => None,
                })
                .collect();
            let name = ["x", "y", "z"]
                .iter()
                .find(|k| !taken.iter().any(|t| t == *k))
                .map_or_else(|| format!("k{}", taken.len()), |k| (*k).to_string());
            raw.nodes.push(RawNode {
                node_type: NodeType::Key,
                label: Label::Key(name),
                children: Vec::new(),
            });
            let key = raw.nodes.len() - 1;
            raw.nodes[p].children.push(key);
            size += 1;
            key
        } else {
            p
        };
        let room = target - size;
        let node_type = match rng.gen_range(0..6) {
            0 if room >= 2 => NodeType::Object,
            1 if room >= 2 => NodeType::Array,
            2 => NodeType::Array,
            _ => NodeType::Literal,
        };
        let label = if node_type == NodeType::Literal { lit(rng) } else { Label::Null };
        raw.nodes.push(RawNode {
            node_type,
            label,
            children: Vec::new(),
        });
        let id = raw.nodes.len() - 1;
        raw.nodes[parent].children.push(id);
        size += 1;
        if node_type != NodeType::Literal {
            containers.push(id);
        }
    }
    JsonTree::from_raw(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::quickjedi;
    use crate::tree::parse_document;

    #[test]
    fn deterministic() {
        let a = synth_corpus(30, Profile::Mixed, 5);
        let b = synth_corpus(30, Profile::Mixed, 5);
        assert_eq!(a.documents, b.documents);
        assert_eq!(a.planted, b.planted);
        assert_ne!(a.documents, synth_corpus(30, Profile::Mixed, 6).documents);
    }

    #[test]
    fn documents_parse_and_round_trip() {
        for profile in Profile::ALL {
            let c = synth_corpus(20, profile, 1);
            for d in &c.documents {
                let t = parse_document(d).unwrap();
                assert_eq!(&t.to_json(), d);
            }
        }
    }

    #[test]
    fn profile_shapes() {
        let t = synth_tree(Profile::FlatWide, 3);
        assert!(t.degree(t.root()) >= 50);
        let deepest = (0..20)
            .map(|s| {
                let t = synth_tree(Profile::Deep, s);
                (0..t.len()).map(|v| t.anc_count(v)).max().unwrap()
            })
            .max()
            .unwrap();
        assert!(deepest >= 11);
    }

    #[test]
    fn sized_trees_are_exact() {
        for size in [1, 2, 3, 10, 257, 1000] {
            assert_eq!(synth_sized_tree(size, size as u64).len(), size);
        }
    }

    #[test]
    fn planted_budgets_hold() {
        let c = synth_corpus(60, Profile::Mixed, 9);
        assert!(!c.planted.is_empty());
        for p in &c.planted {
            let a = parse_document(&c.documents[p.source as usize]).unwrap();
            let b = parse_document(&c.documents[p.id as usize]).unwrap();
            assert!(quickjedi(&a, &b) <= p.budget, "{p:?}");
        }
    }

    #[test]
    fn single_perturbations() {
        let base = parse_document(r#"{"a": 1, "b": {"c": "x", "d": [1, 2]}, "e": null}"#).unwrap();
        let doc = Doc::Object(vec![
            ("a".into(), Doc::Literal(Literal::Number(Number::from_i64(1)))),
            (
                "b".into(),
                Doc::Object(vec![
                    ("c".into(), Doc::Literal(Literal::String("x".into()))),
                    (
                        "d".into(),
                        Doc::Array(vec![
                            Doc::Literal(Literal::Number(Number::from_i64(1))),
                            Doc::Literal(Literal::Number(Number::from_i64(2))),
                        ]),
                    ),
                ]),
            ),
            ("e".into(), Doc::Literal(Literal::Null)),
        ]);
        assert_eq!(doc.to_tree(), base);
        for (kind, expected) in [
            (Perturbation::RenameKey, 1),
            (Perturbation::ChangeLiteral, 1),
            (Perturbation::DeleteMember, 2),
            (Perturbation::ReorderMembers, 0),
        ] {
            for seed in 0..10 {
                let mut g = Generator {
                    rng: ChaCha8Rng::seed_from_u64(seed),
                };
                let mut d = doc.clone();
                assert!(g.perturb(&mut d, kind));
                assert_eq!(quickjedi(&base, &d.to_tree()), expected, "{kind:?}");
            }
        }
    }

    #[test]
    fn random_small_trees_respect_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = random_small_tree(&mut rng, 8);
            assert!(t.len() <= 8 && !t.is_empty());
            assert_eq!(parse_document(&t.to_json()).unwrap(), t);
        }
    }
}
