//! Duplicate-free enumeration of hierarchical partitions, plus the
//! constraint-1-only enumerator and tree rewrites used to cross-check it.

mod multi;
mod switch;

use std::ops::ControlFlow;

pub use multi::{inductive_count, multi_enumerate, multi_enumerate_visit, MULTI_ENUMERATE_MAX_SPLITS};
pub use switch::{normalize, parent_child_switch, tree_from_blocks, Switch, UnitTree};

use crate::dataset::SplitId;
use crate::error::{Error, Result};
use crate::partition::PartitionTree;
use crate::space::Space;

/// A child in the enumeration tree: the parent plus one split (or one whole
/// taxonomy expansion) at leaf `leaf`.
#[derive(Debug, Clone)]
pub struct Child {
    pub tree: PartitionTree,
    pub leaf: usize,
    pub split: SplitId,
}

/// Legal children of `tree`, leaves in pre-order and splits by increasing id.
pub fn children(space: &Space, tree: &PartitionTree) -> Vec<Child> {
    let splits = space.splits();
    let mut out = Vec::new();
    for leaf in tree.eligible_leaves() {
        let block = tree.leaf(leaf).expect("eligible leaf exists");
        for s in PartitionTree::candidates(splits, block) {
            if tree.detect_legal_split(splits, leaf, s) {
                let child = tree.apply_split(space, leaf, s).expect("candidate split applies");
                out.push(Child { tree: child, leaf, split: s });
            }
        }
    }
    out
}

/// Visits every distinct hierarchical partition over a purely numeric split
/// set, depth first, starting with the undivided space. Returns the number of
/// visited nodes; the visitor may stop the traversal early.
pub fn enumerate<F>(space: &Space, visitor: F) -> Result<u64>
where
    F: FnMut(&PartitionTree) -> ControlFlow<()>,
{
    if space.splits().has_taxonomy_splits() {
        return Err(Error::CategoricalSplits);
    }
    Ok(enumerate_from(space, PartitionTree::new(space), visitor))
}

/// Like [`enumerate`], also accepting taxonomy splits; each sibling-set
/// expansion is a single step.
pub fn enumerate_categorical<F>(space: &Space, visitor: F) -> Result<u64>
where
    F: FnMut(&PartitionTree) -> ControlFlow<()>,
{
    Ok(enumerate_from(space, PartitionTree::new(space), visitor))
}

/// Enumerates the subtree of the enumeration tree rooted at `root`.
pub fn enumerate_from<F>(space: &Space, root: PartitionTree, mut visitor: F) -> u64
where
    F: FnMut(&PartitionTree) -> ControlFlow<()>,
{
    let mut count = 0;
    let mut stack = vec![root];
    while let Some(tree) = stack.pop() {
        count += 1;
        if visitor(&tree).is_break() {
            break;
        }
        let kids = children(space, &tree);
        stack.extend(kids.into_iter().rev().map(|c| c.tree));
    }
    count
}

/// Number of enumeration-tree nodes below and including `root`.
pub fn count(space: &Space) -> u64 {
    enumerate_from(space, PartitionTree::new(space), |_| ControlFlow::Continue(()))
}
