//! One hierarchical dimension: a rooted value tree whose root is the synthetic
//! `ALL_<dimension>` value, plus the single-dimension orders and operators.
//!
//! Levels are numbered from 0 (the ⊤ level, holding only the root) to
//! `depth - 1` (the most specific level). A value's parent always sits on a
//! strictly more general level.

use std::collections::HashMap;

use crate::error::{Error, Issue, Result};

/// Dense handle of a value inside one [`Hierarchy`].
///
/// Handles are assigned in ascending order of the external value id, with the
/// root at index 0, so ordering handles orders values by id with ALL first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_root(self) -> bool {
        self == NodeId::ROOT
    }

    pub(crate) fn from_index(index: usize) -> NodeId {
        NodeId(u32::try_from(index).expect("hierarchy larger than u32::MAX values"))
    }
}

#[derive(Debug, Clone)]
struct Node {
    key: Option<i64>,
    label: String,
    level: usize,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    // number of edges from the root
    depth: usize,
    enter: u32,
    exit: u32,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    name: String,
    schema: Vec<String>,
    nodes: Vec<Node>,
    by_key: HashMap<i64, NodeId>,
    by_level: Vec<Vec<NodeId>>,
}

/// Per-level view of one value's root path; `None` marks a NULL slot.
///
/// Slot `k` holds the level `k + 1` ancestor. Filled slots always form a prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimensionalTuple {
    slots: Vec<Option<NodeId>>,
}

impl DimensionalTuple {
    pub fn slots(&self) -> &[Option<NodeId>] {
        &self.slots
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: i64,
    level: usize,
    parent: Option<i64>,
    label: String,
}

/// Accumulates `(id, level, parent, label)` entries and validates them into a
/// strict tree.
#[derive(Debug, Clone)]
pub struct HierarchyBuilder {
    name: String,
    levels: Vec<String>,
    entries: Vec<Entry>,
    seen: HashMap<i64, usize>,
}

impl HierarchyBuilder {
    /// `levels` lists the non-⊤ levels from most general to most specific.
    pub fn new<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        HierarchyBuilder {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
            entries: Vec::new(),
            seen: HashMap::new(),
        }
    }

    /// Adds a value. `level` is 1-based (level 0 is reserved for the root) and
    /// `parent == None` attaches the value directly under the root.
    pub fn value(
        &mut self,
        key: i64,
        level: usize,
        parent: Option<i64>,
        label: impl Into<String>,
    ) -> Result<&mut Self> {
        if self.seen.contains_key(&key) {
            return Err(Error::invalid(
                self.name.clone(),
                None,
                format!("duplicate value id {key}"),
            ));
        }
        self.seen.insert(key, self.entries.len());
        self.entries.push(Entry {
            key,
            level,
            parent,
            label: label.into(),
        });
        Ok(self)
    }

    pub fn build(mut self) -> Result<Hierarchy> {
        let depth = self.levels.len() + 1;
        let mut issues = Vec::new();
        let issue = |msg: String| Issue::new(self.name.clone(), None, msg);

        self.entries.sort_by_key(|e| e.key);
        let by_key: HashMap<i64, NodeId> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.key, NodeId::from_index(i + 1)))
            .collect();

        let mut nodes = Vec::with_capacity(self.entries.len() + 1);
        nodes.push(Node {
            key: None,
            label: format!("ALL_{}", self.name),
            level: 0,
            parent: None,
            children: Vec::new(),
            depth: 0,
            enter: 0,
            exit: 0,
        });
        for e in &self.entries {
            if e.level == 0 || e.level >= depth {
                issues.push(issue(format!(
                    "value {} has level {} outside 1..{}",
                    e.key, e.level, depth
                )));
            }
            let parent = match e.parent {
                None => NodeId::ROOT,
                Some(p) => match by_key.get(&p) {
                    Some(&pid) => {
                        let plevel = self.entries[pid.index() - 1].level;
                        if plevel >= e.level {
                            issues.push(issue(format!(
                                "value {} (level {}) has parent {} at level {}: parent must be more general",
                                e.key, e.level, p, plevel
                            )));
                        }
                        pid
                    }
                    None => {
                        issues.push(issue(format!("value {} has unknown parent {}", e.key, p)));
                        NodeId::ROOT
                    }
                },
            };
            nodes.push(Node {
                key: Some(e.key),
                label: e.label.clone(),
                level: e.level,
                parent: Some(parent),
                children: Vec::new(),
                depth: 0,
                enter: 0,
                exit: 0,
            });
        }
        if !issues.is_empty() {
            return Err(Error::Invalid(issues));
        }

        for i in 1..nodes.len() {
            let parent = nodes[i].parent.expect("non-root has a parent");
            nodes[parent.index()].children.push(NodeId::from_index(i));
        }

        // Iterative DFS: tree depth and Euler intervals for O(1) ancestor tests.
        let mut clock = 0u32;
        let mut stack = vec![(NodeId::ROOT, 0usize)];
        let mut visited = 0usize;
        while let Some(top) = stack.last_mut() {
            let (node, next) = *top;
            if next == 0 {
                nodes[node.index()].enter = clock;
                clock += 1;
                visited += 1;
            }
            if let Some(&child) = nodes[node.index()].children.get(next) {
                top.1 += 1;
                nodes[child.index()].depth = nodes[node.index()].depth + 1;
                stack.push((child, 0));
            } else {
                nodes[node.index()].exit = clock;
                stack.pop();
            }
        }
        // Unreachable only if a cycle slipped past the level check.
        if visited != nodes.len() {
            return Err(Error::invalid(
                self.name.clone(),
                None,
                "parent chain does not reach the root (cycle)",
            ));
        }

        let mut by_level = vec![Vec::new(); depth];
        for (i, n) in nodes.iter().enumerate() {
            by_level[n.level].push(NodeId::from_index(i));
        }

        let mut schema = Vec::with_capacity(depth);
        schema.push("ALL".to_string());
        schema.extend(self.levels);

        Ok(Hierarchy {
            name: self.name,
            schema,
            nodes,
            by_key,
            by_level,
        })
    }
}

impl Hierarchy {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Level names, index 0 being the ⊤ level.
    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn depth(&self) -> usize {
        self.schema.len()
    }

    /// Number of values excluding the ALL root, i.e. `|Dom(h)|`.
    pub fn domain_size(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Total node count including the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// All non-root values in id order.
    pub fn values(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..self.nodes.len()).map(NodeId::from_index)
    }

    /// All nodes, root first.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    pub fn contains(&self, x: NodeId) -> bool {
        x.index() < self.nodes.len()
    }

    pub fn find_key(&self, key: i64) -> Option<NodeId> {
        self.by_key.get(&key).copied()
    }

    /// Values (including the root) whose label equals `label`.
    pub fn find_label(&self, label: &str) -> Vec<NodeId> {
        self.nodes()
            .filter(|&n| self.nodes[n.index()].label == label)
            .collect()
    }

    pub fn key(&self, x: NodeId) -> Option<i64> {
        self.nodes[x.index()].key
    }

    pub fn label(&self, x: NodeId) -> &str {
        &self.nodes[x.index()].label
    }

    /// Label for display; falls back to the id when the label is blank.
    pub fn display(&self, x: NodeId) -> String {
        let node = &self.nodes[x.index()];
        match (node.label.is_empty(), node.key) {
            (true, Some(k)) => k.to_string(),
            _ => node.label.clone(),
        }
    }

    pub fn parent(&self, x: NodeId) -> Option<NodeId> {
        self.nodes[x.index()].parent
    }

    pub fn children(&self, x: NodeId) -> &[NodeId] {
        &self.nodes[x.index()].children
    }

    /// Edges between `x` and the root.
    pub fn tree_depth(&self, x: NodeId) -> usize {
        self.nodes[x.index()].depth
    }

    /// `x`, its parent, ..., the root.
    pub fn ancestors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(Some(x), move |&n| self.parent(n))
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|&n| self.children(n).is_empty())
            .collect()
    }

    pub(crate) fn check(&self, x: NodeId) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::UnknownValue {
                dimension: self.name.clone(),
                value: format!("#{}", x.index()),
            })
        }
    }

    pub fn level_of(&self, x: NodeId) -> Result<usize> {
        self.check(x)?;
        Ok(self.nodes[x.index()].level)
    }

    /// Values stored at level `e`.
    pub fn dom_level(&self, e: usize) -> Result<&[NodeId]> {
        self.by_level
            .get(e)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidLevel {
                dimension: self.name.clone(),
                level: e,
                depth: self.depth(),
            })
    }

    /// `x ⪯ y`: `x` is `y` or lies on `y`'s parent chain.
    pub fn is_ancestor(&self, x: NodeId, y: NodeId) -> Result<bool> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.ancestor_of(x, y))
    }

    pub(crate) fn ancestor_of(&self, x: NodeId, y: NodeId) -> bool {
        let (a, b) = (&self.nodes[x.index()], &self.nodes[y.index()]);
        a.enter <= b.enter && b.exit <= a.exit
    }

    /// Nearest common ancestor; the root when nothing deeper qualifies.
    pub fn dim_sum(&self, x: NodeId, y: NodeId) -> Result<NodeId> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.nca(x, y))
    }

    pub(crate) fn nca(&self, mut x: NodeId, mut y: NodeId) -> NodeId {
        if self.ancestor_of(x, y) {
            return x;
        }
        if self.ancestor_of(y, x) {
            return y;
        }
        while x != y {
            if self.nodes[x.index()].depth >= self.nodes[y.index()].depth {
                x = self.nodes[x.index()].parent.unwrap_or(NodeId::ROOT);
            } else {
                y = self.nodes[y.index()].parent.unwrap_or(NodeId::ROOT);
            }
        }
        x
    }

    /// Product operator with the semantics of the worked examples: `x • x = {x}`;
    /// for distinct values, the nearest common descendants strictly more specific
    /// than both arguments. An empty result stands for `{∅}`.
    ///
    /// For comparable distinct values this is the children of the deeper one, so
    /// it is not the order-theoretic join; see [`Hierarchy::dim_join`].
    pub fn dim_product(&self, x: NodeId, y: NodeId) -> Result<Vec<NodeId>> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(vec![x]);
        }
        let deeper = match self.dim_join_unchecked(x, y) {
            Some(d) => d,
            None => return Ok(Vec::new()),
        };
        Ok(self.nearest_children(self.children(deeper).iter().copied()))
    }

    /// Least common descendant: the deeper argument when the two are comparable,
    /// `None` (the ∅ marker) otherwise. In a tree this is the whole set of
    /// minimal common descendants.
    pub fn dim_join(&self, x: NodeId, y: NodeId) -> Result<Option<NodeId>> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dim_join_unchecked(x, y))
    }

    pub(crate) fn dim_join_unchecked(&self, x: NodeId, y: NodeId) -> Option<NodeId> {
        if self.ancestor_of(x, y) {
            Some(y)
        } else if self.ancestor_of(y, x) {
            Some(x)
        } else {
            None
        }
    }

    /// Semi-product: defined on same-level values, yields the nearest
    /// descendants of either argument. Empty result stands for `{∅}`.
    pub fn dim_semiproduct(&self, x: NodeId, y: NodeId) -> Result<Vec<NodeId>> {
        self.check(x)?;
        self.check(y)?;
        if self.nodes[x.index()].level != self.nodes[y.index()].level {
            return Ok(Vec::new());
        }
        let pool = self.children(x).iter().chain(self.children(y)).copied();
        Ok(self.nearest_children(pool))
    }

    // Keeps the candidates on the most general level among them, sorted and deduplicated.
    fn nearest_children(&self, candidates: impl Iterator<Item = NodeId>) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = candidates.collect();
        let Some(min_level) = out.iter().map(|n| self.nodes[n.index()].level).min() else {
            return out;
        };
        out.retain(|n| self.nodes[n.index()].level == min_level);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Values on the most general non-⊤ level.
    pub fn dim_min(&self) -> Result<&[NodeId]> {
        if self.depth() < 2 {
            return Err(Error::DegenerateHierarchy(self.name.clone()));
        }
        self.dom_level(1)
    }

    /// Values on the most specific level of the schema.
    pub fn dim_max(&self) -> Result<&[NodeId]> {
        if self.depth() < 2 {
            return Err(Error::DegenerateHierarchy(self.name.clone()));
        }
        self.dom_level(self.depth() - 1)
    }

    pub fn dimensional_tuple(&self, x: NodeId) -> Result<DimensionalTuple> {
        self.check(x)?;
        let mut slots = vec![None; self.depth() - 1];
        for a in self.ancestors(x).filter(|a| !a.is_root()) {
            slots[self.nodes[a.index()].level - 1] = Some(a);
        }
        Ok(DimensionalTuple { slots })
    }

    /// Names of the levels whose slot in `t` is not NULL.
    pub fn attribute(&self, t: &DimensionalTuple) -> Vec<&str> {
        t.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .map(|(k, _)| self.schema[k + 1].as_str())
            .collect()
    }
}
