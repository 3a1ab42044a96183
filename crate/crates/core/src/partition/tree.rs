use std::ops::Range;
use std::sync::Arc;

use crate::dataset::{CellRange, Split, SplitId, SplitSet};
use crate::error::{Error, Result};
use crate::space::{Block, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub enum Node {
    Leaf(Arc<Block>),
    Internal(Arc<Internal>),
}

#[derive(Debug)]
pub struct Internal {
    pub split: SplitId,
    pub timestamp: u32,
    pub left: Node,
    pub right: Node,
    leaves: u32,
}

impl Node {
    pub fn leaf(block: Block) -> Node {
        Node::Leaf(Arc::new(block))
    }

    pub fn internal(split: SplitId, timestamp: u32, left: Node, right: Node) -> Node {
        let leaves = left.leaf_count() + right.leaf_count();
        Node::Internal(Arc::new(Internal {
            split,
            timestamp,
            left,
            right,
            leaves,
        }))
    }

    pub fn leaf_count(&self) -> u32 {
        match self {
            Node::Leaf(_) => 1,
            Node::Internal(n) => n.leaves,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }

    pub fn block(&self) -> Option<&Arc<Block>> {
        match self {
            Node::Leaf(b) => Some(b),
            Node::Internal(_) => None,
        }
    }

    pub fn as_internal(&self) -> Option<&Internal> {
        match self {
            Node::Leaf(_) => None,
            Node::Internal(n) => Some(n),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Arc<Block>>) {
        match self {
            Node::Leaf(b) => out.push(b),
            Node::Internal(n) => {
                n.left.collect_leaves(out);
                n.right.collect_leaves(out);
            }
        }
    }
}

/// Canonical, order-independent encoding of a partition: its sorted leaf extents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub Vec<Box<[CellRange]>>);

/// A timestamped partition tree. Values are immutable; every update returns a
/// new tree sharing all untouched subtrees with its parent.
#[derive(Debug, Clone)]
pub struct PartitionTree {
    root: Node,
    internal: u32,
}

/// Which node plays the role of the split being tested in the cut check.
#[derive(Clone, Copy)]
enum Target<'a> {
    /// A leaf (by pre-order index) that is about to receive the split.
    Leaf(usize),
    /// An existing node; nodes created after it are treated as leaves.
    Node(&'a Internal),
}

impl PartitionTree {
    /// The undivided space.
    pub fn new(space: &Space) -> Self {
        PartitionTree {
            root: Node::leaf(space.root_block()),
            internal: 0,
        }
    }

    pub fn from_root(root: Node) -> Self {
        fn count(n: &Node) -> u32 {
            match n {
                Node::Leaf(_) => 0,
                Node::Internal(i) => 1 + count(&i.left) + count(&i.right),
            }
        }
        let internal = count(&root);
        PartitionTree { root, internal }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn internal_count(&self) -> u32 {
        self.internal
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count() as usize
    }

    /// Leaf blocks in pre-order.
    pub fn leaves(&self) -> Vec<&Arc<Block>> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn leaf(&self, mut idx: usize) -> Option<&Arc<Block>> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(b) => return (idx == 0).then_some(b),
                Node::Internal(n) => {
                    let lc = n.left.leaf_count() as usize;
                    if idx < lc {
                        node = &n.left;
                    } else {
                        idx -= lc;
                        node = &n.right;
                    }
                }
            }
        }
    }

    /// Leaves that come after the last internal node in pre-order; only these
    /// may be split without breaking the timestamp order.
    pub fn eligible_leaves(&self) -> Range<usize> {
        let mut offset = 0;
        let mut node = &self.root;
        while let Node::Internal(n) = node {
            if !n.right.is_leaf() {
                offset += n.left.leaf_count() as usize;
                node = &n.right;
            } else if !n.left.is_leaf() {
                node = &n.left;
            } else {
                break;
            }
        }
        offset..self.leaf_count()
    }

    /// Split ids that can be applied at `block`: its available numeric splits
    /// and the first split of each available taxonomy expansion.
    pub fn candidates(splits: &SplitSet, block: &Block) -> Vec<SplitId> {
        let mut out = splits.available(&block.extent);
        out.retain(|&id| splits.is_starter(id));
        out
    }

    /// Splits leaf `leaf` with `s`. A taxonomy split expands the whole sibling
    /// set as a left-deep chain with consecutive timestamps.
    pub fn apply_split(&self, space: &Space, leaf: usize, s: SplitId) -> Result<PartitionTree> {
        let splits = space.splits();
        let block = self.leaf(leaf).ok_or(Error::NoSuchLeaf(leaf))?;
        if s == 0 || s as usize > splits.len() || !Self::candidates(splits, block).contains(&s) {
            return Err(Error::SplitNotAvailable { split: s, leaf });
        }
        let unit = splits.unit(s);
        let sub = build_unit(space, block, unit.clone(), self.internal + 1);
        Ok(PartitionTree {
            root: replace_leaf(&self.root, leaf, sub),
            internal: self.internal + unit.len() as u32,
        })
    }

    /// Decides whether applying `s` at leaf `leaf` keeps the tree a legal
    /// partition tree: the timestamp order must hold and `s` must not be out of
    /// sequence with any enclosing subspace it cuts.
    pub fn detect_legal_split(&self, splits: &SplitSet, leaf: usize, s: SplitId) -> bool {
        if self.root.is_leaf() {
            return true;
        }
        if !self.eligible_leaves().contains(&leaf) {
            return false;
        }
        let split = splits.get(s);
        let path = self.path_to_leaf(leaf);
        for &(node, offset) in path.iter().rev() {
            if !splits.is_starter(node.split) {
                continue;
            }
            if cut(splits, node, offset, split, Target::Leaf(leaf)) {
                if s <= node.split {
                    return false;
                }
            } else {
                return true;
            }
        }
        true
    }

    /// Whether `s` already forms a cut across the subspace of the internal node
    /// reached by `path` from the root.
    pub fn is_split_a_cut(&self, splits: &SplitSet, path: &[Side], s: SplitId) -> Result<bool> {
        let mut node = &self.root;
        let mut offset = 0;
        for side in path {
            let n = node.as_internal().ok_or_else(|| Error::NoSuchNode(format!("{path:?}")))?;
            match side {
                Side::Left => node = &n.left,
                Side::Right => {
                    offset += n.left.leaf_count() as usize;
                    node = &n.right;
                }
            }
        }
        let n = node.as_internal().ok_or_else(|| Error::NoSuchNode(format!("{path:?}")))?;
        Ok(cut(splits, n, offset, splits.get(s), Target::Leaf(usize::MAX)))
    }

    /// Ancestors of a leaf, root first, each with the pre-order index of its first leaf.
    fn path_to_leaf(&self, mut idx: usize) -> Vec<(&Internal, usize)> {
        let mut path = Vec::new();
        let mut node = &self.root;
        let mut offset = 0;
        while let Node::Internal(n) = node {
            path.push((&**n, offset));
            let lc = n.left.leaf_count() as usize;
            if idx < lc {
                node = &n.left;
            } else {
                idx -= lc;
                offset += lc;
                node = &n.right;
            }
        }
        path
    }

    pub fn signature(&self) -> Signature {
        let mut extents: Vec<Box<[CellRange]>> = self.leaves().iter().map(|b| b.extent.clone()).collect();
        extents.sort_unstable();
        Signature(extents)
    }

    /// (split, timestamp) of the internal nodes in pre-order.
    pub fn preorder(&self) -> Vec<(SplitId, u32)> {
        fn walk(n: &Node, out: &mut Vec<(SplitId, u32)>) {
            if let Node::Internal(i) = n {
                out.push((i.split, i.timestamp));
                walk(&i.left, out);
                walk(&i.right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Full structural check: geometry and tuple membership of every block,
    /// expansion chains, timestamp order and in-sequence splits at every node.
    pub fn validate(&self, space: &Space) -> Result<()> {
        let splits = space.splits();
        let bad = |m: String| Err(Error::MalformedTree(m));
        let order = self.preorder();
        let mut stamps: Vec<u32> = order.iter().map(|p| p.1).collect();
        if stamps.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("timestamps not increasing in pre-order: {stamps:?}"));
        }
        stamps.sort_unstable();
        if stamps.iter().enumerate().any(|(i, &t)| t != i as u32 + 1) {
            return bad("timestamps are not 1..n".into());
        }

        let mut total = 0;
        let mut ancestors = Vec::new();
        self.validate_node(space, &self.root, 0, &splits.full_extent(), &mut ancestors, &mut total)?;
        if total != space.n() {
            return bad(format!("blocks hold {total} tuples, expected {}", space.n()));
        }
        Ok(())
    }

    fn validate_node<'a>(
        &'a self,
        space: &Space,
        node: &'a Node,
        offset: usize,
        region: &[CellRange],
        ancestors: &mut Vec<(&'a Internal, usize)>,
        total: &mut u32,
    ) -> Result<()> {
        let splits = space.splits();
        let bad = |m: String| Err(Error::MalformedTree(m));
        match node {
            Node::Leaf(b) => {
                if &*b.extent != region {
                    return bad(format!("leaf extent {:?} differs from region {region:?}", b.extent));
                }
                let mut count = 0;
                for &c in b.cells.iter() {
                    let coords = space.coords(c);
                    if !coords.iter().zip(region).all(|(&x, r)| r.contains(x)) {
                        return bad(format!("cell {c} outside its block"));
                    }
                    count += space.count(c);
                }
                if count != b.count {
                    return bad("block count disagrees with its cells".into());
                }
                *total += count;
                Ok(())
            }
            Node::Internal(n) => {
                let s = splits.get(n.split);
                let parent = ancestors.last().map(|a| a.0);
                if splits.is_starter(n.split) {
                    if !splits.available(region).contains(&n.split) {
                        return bad(format!("split {} not available in its region", n.split));
                    }
                    let mut chain: &Internal = n;
                    for id in splits.unit(n.split).skip(1) {
                        let next = match chain.left.as_internal() {
                            Some(c) if c.split == id && c.timestamp == chain.timestamp + 1 => c,
                            _ => return bad(format!("broken expansion chain at split {}", n.split)),
                        };
                        chain = next;
                    }
                    // In-sequence check against the tree as it was when this node was added.
                    for &(a, a_off) in ancestors.iter().rev() {
                        if !splits.is_starter(a.split) {
                            continue;
                        }
                        if cut(splits, a, a_off, s, Target::Node(n)) {
                            if n.split <= a.split {
                                return bad(format!("split {} out of sequence with {}", n.split, a.split));
                            }
                        } else {
                            break;
                        }
                    }
                } else if parent.is_none_or(|p| {
                    p.split + 1 != n.split || !p.left.as_internal().is_some_and(|l| std::ptr::eq(l, &**n))
                }) {
                    return bad(format!("expansion split {} detached from its chain", n.split));
                }
                let mut left = region.to_vec();
                left[s.dim].hi = s.position - 1;
                let mut right = region.to_vec();
                right[s.dim].lo = s.position;
                ancestors.push((n, offset));
                self.validate_node(space, &n.left, offset, &left, ancestors, total)?;
                let roff = offset + n.left.leaf_count() as usize;
                self.validate_node(space, &n.right, roff, &right, ancestors, total)?;
                ancestors.pop();
                Ok(())
            }
        }
    }
}

/// Cut test on the subspace of `n`. Same-group nodes are descended by the
/// geometric side holding `s`; other nodes need both children cut.
fn cut(splits: &SplitSet, n: &Internal, offset: usize, s: &Split, target: Target) -> bool {
    if let Target::Node(t) = target {
        if std::ptr::eq(n, t) {
            return true;
        }
        if n.timestamp > t.timestamp {
            return false;
        }
    }
    let ns = splits.get(n.split);
    let roff = offset + n.left.leaf_count() as usize;
    let child = |node: &Node, off: usize| match node {
        Node::Leaf(_) => matches!(target, Target::Leaf(i) if i == off),
        Node::Internal(c) => cut(splits, c, off, s, target),
    };
    if ns.dim == s.dim {
        if n.split == s.id {
            true
        } else if ns.position < s.position {
            child(&n.right, roff)
        } else {
            child(&n.left, offset)
        }
    } else {
        child(&n.left, offset) && child(&n.right, roff)
    }
}

fn build_unit(space: &Space, block: &Block, unit: Range<SplitId>, timestamp: u32) -> Node {
    let splits = space.splits();
    let ids: Vec<SplitId> = unit.collect();
    let mut rest = block.clone();
    let mut rights = Vec::with_capacity(ids.len());
    for &id in &ids {
        let s = splits.get(id);
        let (l, r) = space.cut(&rest, s.dim, s.position);
        rights.push(r);
        rest = l;
    }
    let mut node = Node::leaf(rest);
    for (i, right) in rights.into_iter().enumerate().rev() {
        node = Node::internal(ids[i], timestamp + i as u32, node, Node::leaf(right));
    }
    node
}

fn replace_leaf(node: &Node, idx: usize, sub: Node) -> Node {
    match node {
        Node::Leaf(_) => {
            debug_assert_eq!(idx, 0);
            sub
        }
        Node::Internal(n) => {
            let lc = n.left.leaf_count() as usize;
            if idx < lc {
                Node::internal(n.split, n.timestamp, replace_leaf(&n.left, idx, sub), n.right.clone())
            } else {
                Node::internal(n.split, n.timestamp, n.left.clone(), replace_leaf(&n.right, idx - lc, sub))
            }
        }
    }
}
