//! JSON trees: a lossless tree model of JSON documents.
//!
//! Objects become [`NodeType::Object`] nodes whose children are [`NodeType::Key`]
//! nodes; every key has exactly one child holding its value. Arrays become
//! [`NodeType::Array`] nodes with one child per element, in element order.
//! Literals are leaves.
//!
//! Node ids are postorder positions (0-based), so `post(v) == v + 1` and every
//! child id is smaller than its parent's id. Object members keep the order in
//! which they appear in the source text.

mod number;
mod parse;
mod serialize;

use std::fmt::{self, Write as _};

pub use number::Number;
pub use parse::{parse_document, ParseError, ParseErrorKind};

use crate::error::TreeError;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeType {
    Object,
    Array,
    Key,
    Literal,
}

impl NodeType {
    /// Single-character tag used by the debug dump.
    pub fn tag(self) -> char {
        match self {
            NodeType::Object => '{',
            NodeType::Array => '[',
            NodeType::Key => 'K',
            NodeType::Literal => 'L',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Null,
    Bool(bool),
    Number(Number),
    String(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("null"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Number(n) => write!(f, "{n}"),
            Literal::String(s) => f.write_str(&serialize::quote(s)),
        }
    }
}

/// Node label. Object and array nodes carry [`Label::Null`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Null,
    Key(String),
    Literal(Literal),
}

/// A `(type, label)` pair; the unit of label comparison across trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelKey {
    pub node_type: NodeType,
    pub label: Label,
}

impl LabelKey {
    pub fn new(node_type: NodeType, label: Label) -> Self {
        LabelKey { node_type, label }
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Label::Null => write!(f, "{}", self.node_type.tag()),
            Label::Key(k) => write!(f, "K:{}", serialize::quote(k)),
            Label::Literal(l) => write!(f, "L:{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonNode {
    id: NodeId,
    node_type: NodeType,
    label: Label,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

impl JsonNode {
    pub fn id(&self) -> NodeId {
        self.id
    }
    pub fn node_type(&self) -> NodeType {
        self.node_type
    }
    pub fn label(&self) -> &Label {
        &self.label
    }
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }
    pub fn children(&self) -> &[NodeId] {
        &self.children
    }
    pub fn degree(&self) -> usize {
        self.children.len()
    }
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
    pub fn label_key(&self) -> LabelKey {
        LabelKey::new(self.node_type, self.label.clone())
    }
    /// The key string of a key node.
    pub fn key(&self) -> Option<&str> {
        match &self.label {
            Label::Key(k) => Some(k),
            _ => None,
        }
    }
}

/// Sizes of the three regions a node splits its tree into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionSignature {
    pub desc: usize,
    pub anc: usize,
    pub lr: usize,
}

/// Construction-time node: children in sibling order, ids arbitrary.
#[derive(Debug, Clone)]
pub(crate) struct RawNode {
    pub node_type: NodeType,
    pub label: Label,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RawTree {
    pub nodes: Vec<RawNode>,
    pub root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonTree {
    nodes: Vec<JsonNode>,
    subtree_size: Vec<usize>,
    depth: Vec<usize>,
    child_pos: Vec<usize>,
    favorable: Vec<Option<NodeId>>,
    sas_offsets: Vec<usize>,
    sas: Vec<usize>,
    max_degree: usize,
}

impl JsonTree {
    /// The empty tree. Never produced by parsing; used as the `ε` operand.
    pub fn empty() -> Self {
        JsonTree {
            nodes: Vec::new(),
            subtree_size: Vec::new(),
            depth: Vec::new(),
            child_pos: Vec::new(),
            favorable: Vec::new(),
            sas_offsets: vec![0],
            sas: Vec::new(),
            max_degree: 0,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse_document(text)
    }

    pub(crate) fn from_raw(raw: &RawTree) -> Self {
        if raw.nodes.is_empty() {
            return JsonTree::empty();
        }
        let n = raw.nodes.len();
        // iterative postorder over the raw arena
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = vec![(raw.root, 0)];
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = &raw.nodes[node].children;
            if *next < children.len() {
                let child = children[*next];
                *next += 1;
                stack.push((child, 0));
            } else {
                order.push(node);
                stack.pop();
            }
        }
        let mut new_id = vec![usize::MAX; n];
        for (post, &old) in order.iter().enumerate() {
            new_id[old] = post;
        }
        let mut nodes: Vec<JsonNode> = order
            .iter()
            .enumerate()
            .map(|(id, &old)| {
                let r = &raw.nodes[old];
                JsonNode {
                    id,
                    node_type: r.node_type,
                    label: r.label.clone(),
                    parent: None,
                    children: r.children.iter().map(|&c| new_id[c]).collect(),
                }
            })
            .collect();
        for id in 0..nodes.len() {
            for k in 0..nodes[id].children.len() {
                let c = nodes[id].children[k];
                nodes[c].parent = Some(id);
            }
        }
        Self::with_stats(nodes)
    }

    fn with_stats(nodes: Vec<JsonNode>) -> Self {
        let n = nodes.len();
        let mut subtree_size = vec![1usize; n];
        let mut child_pos = vec![0usize; n];
        let mut favorable = vec![None; n];
        let mut max_degree = 0;
        for v in 0..n {
            let node = &nodes[v];
            max_degree = max_degree.max(node.children.len());
            let mut best: Option<NodeId> = None;
            for (i, &c) in node.children.iter().enumerate() {
                subtree_size[v] += subtree_size[c];
                child_pos[c] = i;
                // strict comparison keeps the leftmost among equal sizes
                if best.is_none_or(|b| subtree_size[c] > subtree_size[b]) {
                    best = Some(c);
                }
            }
            favorable[v] = best;
        }
        let mut depth = vec![0usize; n];
        for v in (0..n).rev() {
            if let Some(p) = nodes[v].parent {
                depth[v] = depth[p] + 1;
            }
        }
        let mut sas_offsets = Vec::with_capacity(n + 1);
        let mut sas = Vec::new();
        sas_offsets.push(0);
        let mut sizes = Vec::new();
        for node in &nodes {
            sizes.clear();
            sizes.extend(node.children.iter().map(|&c| subtree_size[c]));
            // stable: ties keep document order
            sizes.sort();
            let mut acc = 0;
            for &s in &sizes {
                acc += s;
                sas.push(acc);
            }
            sas_offsets.push(sas.len());
        }
        JsonTree {
            nodes,
            subtree_size,
            depth,
            child_pos,
            favorable,
            sas_offsets,
            sas,
            max_degree,
        }
    }

    pub(crate) fn to_raw(&self) -> RawTree {
        RawTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| RawNode {
                    node_type: n.node_type,
                    label: n.label.clone(),
                    children: n.children.clone(),
                })
                .collect(),
            root: self.nodes.len().saturating_sub(1),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Root id. Panics on the empty tree.
    pub fn root(&self) -> NodeId {
        assert!(!self.is_empty(), "empty tree has no root");
        self.nodes.len() - 1
    }

    pub fn node(&self, v: NodeId) -> &JsonNode {
        &self.nodes[v]
    }

    pub fn get(&self, v: NodeId) -> Option<&JsonNode> {
        self.nodes.get(v)
    }

    pub fn nodes(&self) -> &[JsonNode] {
        &self.nodes
    }

    pub fn node_type(&self, v: NodeId) -> NodeType {
        self.nodes[v].node_type
    }

    pub fn label(&self, v: NodeId) -> &Label {
        &self.nodes[v].label
    }

    pub fn label_key(&self, v: NodeId) -> LabelKey {
        self.nodes[v].label_key()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.nodes[v].parent
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v].children
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.nodes[v].children.len()
    }

    /// Largest node degree in the tree.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// 1-based postorder position.
    pub fn post(&self, v: NodeId) -> usize {
        v + 1
    }

    pub fn subtree_size(&self, v: NodeId) -> usize {
        self.subtree_size[v]
    }

    pub fn desc_count(&self, v: NodeId) -> usize {
        self.subtree_size[v] - 1
    }

    pub fn anc_count(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    pub fn lr_count(&self, v: NodeId) -> usize {
        self.len() - self.subtree_size[v] - self.depth[v]
    }

    pub fn region_signature(&self, v: NodeId) -> Result<RegionSignature, TreeError> {
        if v >= self.len() {
            return Err(TreeError::InvalidNode {
                id: v,
                size: self.len(),
            });
        }
        Ok(RegionSignature {
            desc: self.desc_count(v),
            anc: self.anc_count(v),
            lr: self.lr_count(v),
        })
    }

    /// Child with the largest subtree, leftmost on ties.
    pub fn favorable_child(&self, v: NodeId) -> Option<NodeId> {
        self.favorable[v]
    }

    pub fn is_favorable_child(&self, v: NodeId) -> bool {
        self.parent(v)
            .is_some_and(|p| self.favorable[p] == Some(v))
    }

    /// Index of `v` among its parent's children.
    pub fn child_position(&self, v: NodeId) -> usize {
        self.child_pos[v]
    }

    pub fn left_sibling(&self, v: NodeId) -> Option<NodeId> {
        let p = self.parent(v)?;
        let i = self.child_pos[v];
        (i > 0).then(|| self.nodes[p].children[i - 1])
    }

    /// `sas(v)[i] = ` sum of the `i + 1` smallest child subtree sizes.
    pub fn sas(&self, v: NodeId) -> &[usize] {
        &self.sas[self.sas_offsets[v]..self.sas_offsets[v + 1]]
    }

    /// True iff `a` is a proper ancestor of `d`.
    pub fn is_ancestor(&self, a: NodeId, d: NodeId) -> bool {
        d < a && a + 1 - self.subtree_size[a] <= d
    }

    /// Lowest common ancestor by walking parent links.
    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let mut x = a;
        while x != b && !self.is_ancestor(x, b) {
            x = self.nodes[x].parent.expect("nodes share the root");
        }
        x
    }

    /// True iff every object's members are in bytewise key order.
    pub fn is_sorted(&self) -> bool {
        self.nodes
            .iter()
            .filter(|n| n.node_type == NodeType::Object)
            .all(|n| {
                n.children.windows(2).all(|w| {
                    let a = self.nodes[w[0]].key().unwrap_or("");
                    let b = self.nodes[w[1]].key().unwrap_or("");
                    a.as_bytes() < b.as_bytes()
                })
            })
    }

    /// Copy of the tree with object members sorted by key bytes.
    pub fn sort(&self) -> JsonTree {
        let mut raw = self.to_raw();
        for node in raw.nodes.iter_mut() {
            if node.node_type == NodeType::Object {
                let keys: Vec<(usize, String)> = node
                    .children
                    .iter()
                    .map(|&c| (c, self.nodes[c].key().unwrap_or("").to_string()))
                    .collect();
                let mut keys = keys;
                keys.sort_by(|a, b| a.1.as_bytes().cmp(b.1.as_bytes()));
                node.children = keys.into_iter().map(|(c, _)| c).collect();
            }
        }
        JsonTree::from_raw(&raw)
    }

    /// Postorder that descends into the favorable child first, then the
    /// remaining children left to right.
    pub fn favorable_child_order(&self) -> Vec<NodeId> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.len());
        // (node, next index into the visiting sequence); index 0 is the
        // favorable child, then the others in order
        let mut stack: Vec<(NodeId, usize)> = vec![(self.root(), 0)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let children = &self.nodes[v].children;
            if *next < children.len() {
                let fav = self.favorable[v].expect("non-leaf");
                let child = if *next == 0 {
                    fav
                } else {
                    let pos = self.child_pos[fav];
                    let k = *next - 1;
                    children[if k < pos { k } else { k + 1 }]
                };
                *next += 1;
                stack.push((child, 0));
            } else {
                out.push(v);
                stack.pop();
            }
        }
        out
    }

    /// Serializes back to compact JSON text.
    pub fn to_json(&self) -> String {
        serialize::serialize_tree(self)
    }

    /// One node per line: postorder index, type tag, label, parent postorder
    /// index (0 for the root).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            let label = match &node.label {
                Label::Null => "-".to_string(),
                Label::Key(k) => serialize::quote(k),
                Label::Literal(l) => l.to_string(),
            };
            let parent = node.parent.map_or(0, |p| p + 1);
            let _ = writeln!(
                out,
                "{} {} {} {}",
                node.id + 1,
                node.node_type.tag(),
                label,
                parent
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MOVIE_A: &str = r#"{"title": "Star Wars - A New Hope", "running time": 125, "cast": {"Han": "Ford", "Leia": "Fisher"}}"#;
    pub(crate) const MOVIE_B: &str = r#"{"cast": ["Ford", "Fisher"], "running time": 125, "name": "Star Wars - A New Hope"}"#;

    fn find_key(t: &JsonTree, key: &str) -> NodeId {
        (0..t.len()).find(|&v| t.node(v).key() == Some(key)).unwrap()
    }

    #[test]
    fn movie_documents_have_expected_shape() {
        let t1 = parse_document(MOVIE_A).unwrap();
        assert_eq!(t1.len(), 11);
        let root = t1.root();
        assert_eq!(t1.node_type(root), NodeType::Object);
        assert_eq!(t1.degree(root), 3);
        assert_eq!(t1.subtree_size(find_key(&t1, "cast")), 6);

        let t2 = parse_document(MOVIE_B).unwrap();
        assert_eq!(t2.len(), 9);
        let count = |ty| t2.nodes().iter().filter(|n| n.node_type() == ty).count();
        assert_eq!(count(NodeType::Object), 1);
        assert_eq!(count(NodeType::Array), 1);
        assert_eq!(count(NodeType::Key), 3);
        assert_eq!(count(NodeType::Literal), 4);
    }

    #[test]
    fn nesting_is_not_lost() {
        let bare = parse_document(r#""A""#).unwrap();
        assert_eq!(bare.len(), 1);
        assert_eq!(bare.node_type(0), NodeType::Literal);
        let nested = parse_document(r#"{"a": [["A"]]}"#).unwrap();
        assert_eq!(nested.len(), 5);
        assert_ne!(bare, nested);
    }

    #[test]
    fn region_signatures() {
        let t1 = parse_document(MOVIE_A).unwrap();
        let rt = find_key(&t1, "running time");
        let sig = t1.region_signature(rt).unwrap();
        assert_eq!((sig.desc, sig.anc, sig.lr), (1, 1, 8));
        let root = t1.region_signature(t1.root()).unwrap();
        assert_eq!((root.desc, root.anc, root.lr), (10, 0, 0));
        assert!(t1.region_signature(11).is_err());

        let path = parse_document(r#"[[[[1]]]]"#).unwrap();
        let leaf = path.region_signature(0).unwrap();
        assert_eq!((leaf.desc, leaf.anc, leaf.lr), (0, 4, 0));
    }

    #[test]
    fn region_counts_partition_tree() {
        for doc in [MOVIE_A, MOVIE_B, r#"[1, {"a": [2, 3], "b": {}}, [], "x"]"#] {
            let t = parse_document(doc).unwrap();
            for v in 0..t.len() {
                assert_eq!(t.desc_count(v) + t.anc_count(v) + t.lr_count(v) + 1, t.len());
            }
        }
    }

    #[test]
    fn sas_arrays() {
        let t2 = parse_document(MOVIE_B).unwrap();
        assert_eq!(t2.sas(t2.root()), &[2, 4, 8]);
        let t1 = parse_document(MOVIE_A).unwrap();
        assert_eq!(t1.sas(t1.root()), &[2, 4, 10]);
        for v in 0..t1.len() {
            let s = t1.sas(v);
            assert_eq!(s.len(), t1.degree(v));
            assert!(s.windows(2).all(|w| w[0] <= w[1]));
            if let Some(&last) = s.last() {
                assert_eq!(last, t1.subtree_size(v) - 1);
            }
        }
    }

    #[test]
    fn sorting_movie_trees() {
        let t1 = parse_document(MOVIE_A).unwrap().sort();
        let keys: Vec<_> = t1
            .children(t1.root())
            .iter()
            .map(|&c| t1.node(c).key().unwrap().to_string())
            .collect();
        assert_eq!(keys, ["cast", "running time", "title"]);
        // postorder numbers of the sorted tree: v6 = cast, v8 = running time
        assert_eq!(t1.node(5).key(), Some("cast"));
        assert_eq!(t1.node(7).key(), Some("running time"));
        assert_eq!(t1.node(9).key(), Some("title"));

        let t2 = parse_document(MOVIE_B).unwrap().sort();
        let keys: Vec<_> = t2
            .children(t2.root())
            .iter()
            .map(|&c| t2.node(c).key().unwrap().to_string())
            .collect();
        assert_eq!(keys, ["cast", "name", "running time"]);
        assert_eq!(t2.node(3).key(), Some("cast"));
        assert_eq!(t2.node(5).key(), Some("name"));
        assert_eq!(t2.node(7).key(), Some("running time"));
        assert!(t1.is_sorted() && t2.is_sorted());
        assert_eq!(t1.sort(), t1);
    }

    #[test]
    fn sort_without_objects_is_identity() {
        let t = parse_document(r#"[3, [2, 1], "z", "a"]"#).unwrap();
        assert_eq!(t.sort(), t);
    }

    #[test]
    fn favorable_children_of_sorted_movie_tree() {
        let t1 = parse_document(MOVIE_A).unwrap().sort();
        // root: cast (size 6); cast: its object; object: Han (leftmost tie)
        assert_eq!(t1.favorable_child(10), Some(5));
        assert_eq!(t1.favorable_child(5), Some(4));
        assert_eq!(t1.favorable_child(4), Some(1));
        assert_eq!(t1.favorable_child(7), Some(6));
        assert_eq!(t1.favorable_child(0), None);
        let order = t1.favorable_child_order();
        assert_eq!(order.len(), 11);
        assert_eq!(order[0], 0);
    }

    #[test]
    fn favorable_order_on_path_is_postorder() {
        let t = parse_document(r#"{"a": {"b": [[{}]]}}"#).unwrap();
        assert_eq!(t.favorable_child_order(), (0..t.len()).collect::<Vec<_>>());
    }

    #[test]
    fn favorable_order_visits_big_child_first() {
        let t = parse_document(r#"[1, [2, 3, 4], 5]"#).unwrap();
        // postorder ids: 1->0, 2->1, 3->2, 4->3, inner->4, 5->5, root->6
        assert_eq!(t.favorable_child_order(), vec![1, 2, 3, 4, 0, 5, 6]);
    }

    #[test]
    fn lca_and_ancestry() {
        let t = parse_document(MOVIE_A).unwrap();
        let han = find_key(&t, "Han");
        let leia = find_key(&t, "Leia");
        let cast = find_key(&t, "cast");
        assert_eq!(t.lca(han, leia), t.parent(han).unwrap());
        assert!(t.is_ancestor(cast, han));
        assert!(!t.is_ancestor(han, cast));
        assert!(!t.is_ancestor(han, han));
        assert_eq!(t.lca(han, t.root()), t.root());
    }

    #[test]
    fn dump_format() {
        let t = parse_document(r#"{"a": [1, null]}"#).unwrap();
        assert_eq!(t.dump(), "1 L 1 3\n2 L null 3\n3 [ - 4\n4 K \"a\" 5\n5 { - 0\n");
    }
}
