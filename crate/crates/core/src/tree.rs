//! Dimension partition trees over the mode set {1, ..., d}.
//!
//! Every node is a nonempty subset of modes: the root holds all of them,
//! the children of a node partition it, and leaves are singletons. Nodes
//! are stored level by level in lexicographic mode order, so `NodeId`
//! iteration order is deterministic and stable across runs.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::Value;

use crate::error::{Error, Result};

/// Handle into a [`DimensionTree`]. Ids are dense indices; the root is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Recursive construction spec for [`DimensionTree::custom`].
#[derive(Debug, Clone)]
pub enum Branch {
    Leaf(usize),
    Node(Vec<Branch>),
}

#[derive(Debug, Clone)]
struct NodeData {
    modes: Vec<usize>,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    level: usize,
}

/// Dimension partition tree. Immutable after construction.
#[derive(Debug, Clone)]
pub struct DimensionTree {
    d: usize,
    nodes: Vec<NodeData>,
}

impl DimensionTree {
    /// Depth-1 tree: the root's children are the d singletons.
    pub fn trivial(d: usize) -> Result<Self> {
        check_d(d)?;
        let children = (1..=d).map(Branch::Leaf).collect();
        Self::custom(Branch::Node(children))
    }

    /// Linear binary tree: {1..k} splits into {1..k-1} and {k}.
    pub fn linear_binary(d: usize) -> Result<Self> {
        check_d(d)?;
        let mut node = Branch::Node(vec![Branch::Leaf(1), Branch::Leaf(2)]);
        for k in 3..=d {
            node = Branch::Node(vec![node, Branch::Leaf(k)]);
        }
        Self::custom(node)
    }

    /// Balanced binary tree: a block of k consecutive modes splits into its
    /// first ceil(k/2) modes and the rest.
    pub fn balanced_binary(d: usize) -> Result<Self> {
        check_d(d)?;
        fn split(modes: &[usize]) -> Branch {
            if modes.len() == 1 {
                return Branch::Leaf(modes[0]);
            }
            let mid = modes.len().div_ceil(2);
            Branch::Node(vec![split(&modes[..mid]), split(&modes[mid..])])
        }
        let modes: Vec<usize> = (1..=d).collect();
        Self::custom(split(&modes))
    }

    /// Builds a tree from an explicit recursive layout. The root's mode set
    /// is the union of the leaves and must be {1, ..., d} for some d ≥ 2;
    /// children must partition their parent and interior nodes need at
    /// least two children.
    pub fn custom(root: Branch) -> Result<Self> {
        let d = match &root {
            Branch::Leaf(_) => {
                return Err(Error::InvalidTree("root cannot be a single leaf".into()))
            }
            Branch::Node(_) => {
                let mut modes = BTreeSet::new();
                collect_modes(&root, &mut modes)?;
                let d = modes.len();
                let expect: BTreeSet<usize> = (1..=d).collect();
                if modes != expect {
                    return Err(Error::InvalidTree(format!(
                        "leaf modes {:?} are not exactly 1..={}",
                        modes, d
                    )));
                }
                d
            }
        };
        check_d(d)?;

        // Breadth-first construction with children sorted by mode set keeps
        // NodeId order canonical: level-major, lexicographic within a level.
        let mut nodes: Vec<NodeData> = Vec::new();
        let mut queue: Vec<(Branch, Option<NodeId>, usize)> = vec![(root, None, 0)];
        while !queue.is_empty() {
            let mut next = Vec::new();
            for (branch, parent, level) in queue {
                let (modes, kids) = branch_parts(&branch)?;
                let id = NodeId(nodes.len());
                nodes.push(NodeData {
                    modes,
                    parent,
                    children: Vec::new(),
                    level,
                });
                if let Some(p) = parent {
                    nodes[p.0].children.push(id);
                }
                let mut kids = kids;
                kids.sort_by(|a, b| branch_modes(a).cmp(&branch_modes(b)));
                for k in kids {
                    next.push((k, Some(id), level + 1));
                }
            }
            // Keep level-major order: sort the pending level by mode set.
            next.sort_by(|a, b| branch_modes(&a.0).cmp(&branch_modes(&b.0)));
            queue = next;
        }

        // Children were registered in queue order, which is sorted per parent
        // because sibling mode sets are disjoint; normalize anyway.
        for n in &mut nodes {
            let mut ch = std::mem::take(&mut n.children);
            ch.sort();
            n.children = ch;
        }

        let tree = DimensionTree { d, nodes };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.modes.is_empty() {
                return Err(Error::InvalidTree(format!("node {i} is empty")));
            }
            if n.children.len() == 1 {
                return Err(Error::InvalidTree(format!(
                    "interior node {} has a single child",
                    self.label(NodeId(i))
                )));
            }
            if !n.children.is_empty() {
                let mut union = BTreeSet::new();
                let mut total = 0usize;
                for &c in &n.children {
                    total += self.nodes[c.0].modes.len();
                    union.extend(self.nodes[c.0].modes.iter().copied());
                }
                let own: BTreeSet<usize> = n.modes.iter().copied().collect();
                if union != own || total != n.modes.len() {
                    return Err(Error::InvalidTree(format!(
                        "children of {} do not partition it",
                        self.label(NodeId(i))
                    )));
                }
            } else if n.modes.len() != 1 {
                return Err(Error::InvalidTree(format!(
                    "leaf {} is not a singleton",
                    self.label(NodeId(i))
                )));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Longest root-to-leaf distance.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Largest child count over interior nodes.
    pub fn max_arity(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn modes(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].modes
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// Children in lexicographic mode order (equivalently: by smallest mode).
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn level(&self, id: NodeId) -> usize {
        self.nodes[id.0].level
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.0].children.is_empty()
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        id.0 == 0
    }

    /// All ids in canonical order: level-major, lexicographic within a level.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn non_root_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..self.nodes.len()).map(NodeId)
    }

    pub fn interior_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|&id| !self.is_leaf(id))
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|&id| self.is_leaf(id))
    }

    /// Nodes at distance `level` from the root, in canonical order.
    pub fn level_nodes(&self, level: usize) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&id| self.nodes[id.0].level == level)
            .collect()
    }

    /// Leaf node holding the given mode (1-based).
    pub fn leaf_for_mode(&self, mode: usize) -> Option<NodeId> {
        self.node_ids()
            .find(|&id| self.is_leaf(id) && self.nodes[id.0].modes == [mode])
    }

    pub fn find(&self, modes: &[usize]) -> Option<NodeId> {
        let mut key: Vec<usize> = modes.to_vec();
        key.sort_unstable();
        self.node_ids().find(|&id| self.nodes[id.0].modes == key)
    }

    /// Modes of D not held by this node, sorted.
    pub fn complement(&self, id: NodeId) -> Vec<usize> {
        let own: BTreeSet<usize> = self.nodes[id.0].modes.iter().copied().collect();
        (1..=self.d).filter(|m| !own.contains(m)).collect()
    }

    /// Stable textual name for a node, e.g. "1-2-3".
    pub fn label(&self, id: NodeId) -> String {
        self.nodes[id.0]
            .modes
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Nested-array encoding: a node is `[modes, child, child, ...]` and a
    /// leaf is `[[m]]`.
    pub fn to_json_value(&self) -> Value {
        fn encode(tree: &DimensionTree, id: NodeId) -> Value {
            let modes: Vec<Value> = tree.modes(id).iter().map(|&m| Value::from(m)).collect();
            let mut arr = vec![Value::Array(modes)];
            for &c in tree.children(id) {
                arr.push(encode(tree, c));
            }
            Value::Array(arr)
        }
        encode(self, self.root())
    }

    /// Parses the nested-array encoding and validates that every listed mode
    /// set matches the union of its leaves.
    pub fn from_json_value(v: &Value) -> Result<Self> {
        fn parse(v: &Value) -> Result<(Vec<usize>, Branch)> {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::InvalidTree("expected a JSON array node".into()))?;
            if arr.is_empty() {
                return Err(Error::InvalidTree("empty array node".into()));
            }
            let modes: Vec<usize> = arr[0]
                .as_array()
                .ok_or_else(|| Error::InvalidTree("node must start with a mode list".into()))?
                .iter()
                .map(|m| {
                    m.as_u64()
                        .map(|m| m as usize)
                        .ok_or_else(|| Error::InvalidTree(format!("bad mode {m}")))
                })
                .collect::<Result<_>>()?;
            if arr.len() == 1 {
                if modes.len() != 1 {
                    return Err(Error::InvalidTree(format!(
                        "leaf with modes {modes:?} is not a singleton"
                    )));
                }
                let m = modes[0];
                return Ok((modes, Branch::Leaf(m)));
            }
            let mut kids = Vec::new();
            let mut union = BTreeSet::new();
            for child in &arr[1..] {
                let (m, b) = parse(child)?;
                union.extend(m);
                kids.push(b);
            }
            let listed: BTreeSet<usize> = modes.iter().copied().collect();
            if listed != union || listed.len() != modes.len() {
                return Err(Error::InvalidTree(format!(
                    "listed modes {modes:?} do not match children union {union:?}"
                )));
            }
            Ok((modes, Branch::Node(kids)))
        }
        let (_, root) = parse(v)?;
        Self::custom(root)
    }
}

impl fmt::Display for DimensionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json_value())
    }
}

impl serde::Serialize for DimensionTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for DimensionTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        DimensionTree::from_json_value(&v).map_err(serde::de::Error::custom)
    }
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidTree(format!("need at least 2 modes, got {d}")));
    }
    Ok(())
}

fn collect_modes(b: &Branch, out: &mut BTreeSet<usize>) -> Result<()> {
    match b {
        Branch::Leaf(m) => {
            if !out.insert(*m) {
                return Err(Error::InvalidTree(format!("mode {m} appears twice")));
            }
        }
        Branch::Node(kids) => {
            for k in kids {
                collect_modes(k, out)?;
            }
        }
    }
    Ok(())
}

fn branch_modes(b: &Branch) -> Vec<usize> {
    let mut set = BTreeSet::new();
    let _ = collect_modes(b, &mut set);
    set.into_iter().collect()
}

fn branch_parts(b: &Branch) -> Result<(Vec<usize>, Vec<Branch>)> {
    match b {
        Branch::Leaf(m) => Ok((vec![*m], Vec::new())),
        Branch::Node(kids) => {
            if kids.len() < 2 {
                return Err(Error::InvalidTree(
                    "interior node needs at least two children".into(),
                ));
            }
            Ok((branch_modes(b), kids.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes_at(tree: &DimensionTree, level: usize) -> Vec<Vec<usize>> {
        tree.level_nodes(level)
            .into_iter()
            .map(|id| tree.modes(id).to_vec())
            .collect()
    }

    #[test]
    fn trivial_tree_shape() {
        let t = DimensionTree::trivial(4).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.node_count(), 5);
        assert_eq!(t.max_arity(), 4);
        assert_eq!(t.modes(t.root()), &[1, 2, 3, 4]);
        assert_eq!(
            modes_at(&t, 1),
            vec![vec![1], vec![2], vec![3], vec![4]]
        );
    }

    #[test]
    fn linear_tree_levels() {
        let t = DimensionTree::linear_binary(5).unwrap();
        assert_eq!(t.depth(), 4);
        assert_eq!(t.node_count(), 9);
        assert_eq!(modes_at(&t, 2), vec![vec![1, 2, 3], vec![4]]);
        assert_eq!(modes_at(&t, 1), vec![vec![1, 2, 3, 4], vec![5]]);
    }

    #[test]
    fn balanced_tree_splits_left_heavy() {
        let t = DimensionTree::balanced_binary(5).unwrap();
        assert_eq!(t.depth(), 3);
        let root_children: Vec<Vec<usize>> = t
            .children(t.root())
            .iter()
            .map(|&c| t.modes(c).to_vec())
            .collect();
        assert_eq!(root_children, vec![vec![1, 2, 3], vec![4, 5]]);

        let t4 = DimensionTree::balanced_binary(4).unwrap();
        assert_eq!(t4.depth(), 2);
        assert_eq!(t4.node_count(), 7);
    }

    #[test]
    fn custom_tree_matches_hand_layout() {
        // {1,2,3,4,5} -> ({1,2,3} -> ({1}, {2,3} -> ({2},{3})), {4,5} -> ({4},{5}))
        let tree = DimensionTree::custom(Branch::Node(vec![
            Branch::Node(vec![
                Branch::Leaf(1),
                Branch::Node(vec![Branch::Leaf(2), Branch::Leaf(3)]),
            ]),
            Branch::Node(vec![Branch::Leaf(4), Branch::Leaf(5)]),
        ]))
        .unwrap();
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.node_count(), 9);
        assert_eq!(modes_at(&tree, 2), vec![vec![1], vec![2, 3], vec![4], vec![5]]);
        assert_eq!(modes_at(&tree, 3), vec![vec![2], vec![3]]);
    }

    #[test]
    fn complement_is_sorted_difference() {
        let t = DimensionTree::balanced_binary(5).unwrap();
        let n = t.find(&[4, 5]).unwrap();
        assert_eq!(t.complement(n), vec![1, 2, 3]);
        let leaf = t.find(&[2]).unwrap();
        assert_eq!(t.complement(leaf), vec![1, 3, 4, 5]);
    }

    #[test]
    fn rejects_bad_partitions() {
        // Mode appears twice.
        assert!(DimensionTree::custom(Branch::Node(vec![
            Branch::Leaf(1),
            Branch::Leaf(1),
        ]))
        .is_err());
        // Hole in 1..=d.
        assert!(DimensionTree::custom(Branch::Node(vec![
            Branch::Leaf(1),
            Branch::Leaf(3),
        ]))
        .is_err());
        // Single-child interior node.
        assert!(DimensionTree::custom(Branch::Node(vec![Branch::Node(vec![
            Branch::Leaf(1)
        ]),]))
        .is_err());
        assert!(DimensionTree::trivial(1).is_err());
    }

    #[test]
    fn json_round_trip() {
        for tree in [
            DimensionTree::trivial(3).unwrap(),
            DimensionTree::linear_binary(4).unwrap(),
            DimensionTree::balanced_binary(6).unwrap(),
        ] {
            let v = tree.to_json_value();
            let back = DimensionTree::from_json_value(&v).unwrap();
            assert_eq!(back.to_json_value(), v);
        }
    }

    #[test]
    fn json_parse_checks_listed_modes() {
        // Listed mode set disagrees with children.
        let bad: Value =
            serde_json::from_str("[[1,2,3],[[1]],[[2]]]").unwrap();
        assert!(DimensionTree::from_json_value(&bad).is_err());

        let good: Value =
            serde_json::from_str("[[1,2,3],[[1]],[[2,3],[[2]],[[3]]]]").unwrap();
        let t = DimensionTree::from_json_value(&good).unwrap();
        assert_eq!(t.node_count(), 5);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn canonical_order_is_level_major() {
        let t = DimensionTree::balanced_binary(4).unwrap();
        let labels: Vec<String> = t.node_ids().map(|id| t.label(id)).collect();
        assert_eq!(
            labels,
            vec!["1-2-3-4", "1-2", "3-4", "1", "2", "3", "4"]
        );
    }
}
