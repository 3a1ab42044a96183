use crate::dataset::{CellRange, Split, SplitId, SplitSet};
use crate::error::{Error, Result};
use crate::partition::{Node, PartitionTree, Side};
use crate::space::{Block, Space};

/// Shape of a partition tree with each taxonomy expansion collapsed into one
/// k-ary unit. Children are listed left to right in space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitTree {
    Leaf,
    Unit { starter: SplitId, children: Vec<UnitTree> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Switch {
    /// Both children carry the same split along another dimension; swap levels.
    Orthogonal,
    /// The right child carries a parallel split; it becomes the parent.
    RotateLeft,
    /// The left child carries a parallel split; it becomes the parent.
    RotateRight,
}

impl UnitTree {
    pub fn from_tree(splits: &SplitSet, tree: &PartitionTree) -> Self {
        Self::from_node(splits, tree.root())
    }

    fn from_node(splits: &SplitSet, node: &Node) -> Self {
        let Node::Internal(n) = node else {
            return UnitTree::Leaf;
        };
        let last = splits.unit(n.split).end - 1;
        let mut rights = Vec::new();
        let mut cur = &**n;
        loop {
            rights.push(Self::from_node(splits, &cur.right));
            if cur.split == last {
                break;
            }
            cur = cur.left.as_internal().expect("expansion chain continues on the left");
        }
        let mut children = vec![Self::from_node(splits, &cur.left)];
        children.extend(rights.into_iter().rev());
        UnitTree::Unit {
            starter: n.split,
            children,
        }
    }

    /// Rebuilds a partition tree with timestamps assigned in pre-order.
    pub fn build(&self, space: &Space) -> PartitionTree {
        let mut ts = 1;
        PartitionTree::from_root(build_node(space, space.root_block(), self, &mut ts))
    }

    /// Whether `u` cuts the subspace of this tree (descending same-dimension
    /// units on the side holding `u`, requiring all children otherwise).
    fn is_cut(&self, splits: &SplitSet, u: &Split) -> bool {
        match self {
            UnitTree::Leaf => false,
            UnitTree::Unit { starter, children } => {
                if *starter == u.id {
                    return true;
                }
                if splits.get(*starter).dim == u.dim {
                    children[child_holding(splits, *starter, u.position)].is_cut(splits, u)
                } else {
                    children.iter().all(|c| c.is_cut(splits, u))
                }
            }
        }
    }
}

/// Index of the unit child whose range contains cell `position`.
fn child_holding(splits: &SplitSet, starter: SplitId, position: u32) -> usize {
    splits.unit(starter).filter(|&id| splits.get(id).position <= position).count()
}

fn build_node(space: &Space, block: Block, t: &UnitTree, ts: &mut u32) -> Node {
    let UnitTree::Unit { starter, children } = t else {
        return Node::leaf(block);
    };
    let splits = space.splits();
    let ids: Vec<SplitId> = splits.unit(*starter).collect();
    let base = *ts;
    *ts += ids.len() as u32;
    let mut rest = block;
    let mut rights = Vec::with_capacity(ids.len());
    for &id in &ids {
        let s = splits.get(id);
        let (l, r) = space.cut(&rest, s.dim, s.position);
        rights.push(r);
        rest = l;
    }
    let mut blocks = vec![rest];
    blocks.extend(rights.into_iter().rev());
    let built: Vec<Node> = blocks
        .into_iter()
        .zip(children)
        .map(|(b, c)| build_node(space, b, c, ts))
        .collect();
    let mut built = built.into_iter();
    let mut node = built.next().expect("unit has children");
    for (i, right) in built.enumerate() {
        let k = ids.len() - 1 - i;
        node = Node::internal(ids[k], base + k as u32, node, right);
    }
    node
}

/// Brings unit `u`, which must cut the subspace of `t`, to the root of `t`
/// using partition-preserving switches.
fn lift(splits: &SplitSet, t: &UnitTree, u: &Split) -> UnitTree {
    let UnitTree::Unit { starter, children } = t else {
        unreachable!("a leaf has no cuts")
    };
    if *starter == u.id {
        return t.clone();
    }
    if splits.get(*starter).dim == u.dim {
        // Parallel numeric splits: rotate.
        let j = child_holding(splits, *starter, u.position);
        let UnitTree::Unit { children: inner, .. } = lift(splits, &children[j], u) else {
            unreachable!()
        };
        let (a, b) = (inner[0].clone(), inner[1].clone());
        return if j == 1 {
            unit(u.id, vec![unit(*starter, vec![children[0].clone(), a]), b])
        } else {
            unit(u.id, vec![a, unit(*starter, vec![b, children[1].clone()])])
        };
    }
    // Orthogonal: lift in every child, then transpose the two levels.
    let lifted: Vec<Vec<UnitTree>> = children
        .iter()
        .map(|c| match lift(splits, c, u) {
            UnitTree::Unit { children, .. } => children,
            UnitTree::Leaf => unreachable!(),
        })
        .collect();
    let width = lifted[0].len();
    unit(
        u.id,
        (0..width)
            .map(|j| unit(*starter, lifted.iter().map(|g| g[j].clone()).collect()))
            .collect(),
    )
}

fn unit(starter: SplitId, children: Vec<UnitTree>) -> UnitTree {
    UnitTree::Unit { starter, children }
}

fn child_regions(splits: &SplitSet, starter: SplitId, region: &[CellRange]) -> Vec<Vec<CellRange>> {
    let mut positions: Vec<(usize, u32)> = splits
        .unit(starter)
        .map(|id| (splits.get(id).dim, splits.get(id).position))
        .collect();
    positions.sort_unstable_by_key(|p| p.1);
    let dim = positions[0].0;
    let mut out = Vec::with_capacity(positions.len() + 1);
    let mut lo = region[dim].lo;
    for &(_, p) in &positions {
        let mut r = region.to_vec();
        r[dim] = CellRange { lo, hi: p - 1 };
        out.push(r);
        lo = p;
    }
    let mut r = region.to_vec();
    r[dim] = CellRange { lo, hi: region[dim].hi };
    out.push(r);
    out
}

fn normalize_unit(splits: &SplitSet, t: &UnitTree, region: &[CellRange]) -> UnitTree {
    if matches!(t, UnitTree::Leaf) {
        return UnitTree::Leaf;
    }
    let u = splits
        .available(region)
        .into_iter()
        .filter(|&id| splits.is_starter(id))
        .find(|&id| t.is_cut(splits, splits.get(id)))
        .expect("the root unit of a subtree always cuts it");
    let UnitTree::Unit { children, .. } = lift(splits, t, splits.get(u)) else {
        unreachable!()
    };
    let regions = child_regions(splits, u, region);
    unit(
        u,
        children
            .iter()
            .zip(&regions)
            .map(|(c, r)| normalize_unit(splits, c, r))
            .collect(),
    )
}

/// Rewrites any timestamp-ordered tree into the unique conflict-free tree
/// denoting the same partition: in every subspace the highest-priority cut
/// is lifted to the top.
pub fn normalize(space: &Space, tree: &PartitionTree) -> PartitionTree {
    let splits = space.splits();
    let shape = UnitTree::from_tree(splits, tree);
    normalize_unit(splits, &shape, &splits.full_extent()).build(space)
}

/// Applies one parent-child switch at the numeric node reached by `path`.
/// Timestamps are renumbered in pre-order afterwards.
pub fn parent_child_switch(space: &Space, tree: &PartitionTree, path: &[Side], kind: Switch) -> Result<PartitionTree> {
    let splits = space.splits();
    let mut shape = UnitTree::from_tree(splits, tree);
    let mut node = &mut shape;
    for side in path {
        match node {
            UnitTree::Unit { starter, children } if !splits.is_taxonomy(*starter) => {
                node = &mut children[*side as usize];
            }
            _ => return Err(Error::NoSuchNode(format!("{path:?}"))),
        }
    }
    let UnitTree::Unit { starter: s1, children } = node else {
        return Err(Error::NoSuchNode(format!("{path:?}")));
    };
    let s1 = *s1;
    let numeric = |t: &UnitTree| match t {
        UnitTree::Unit { starter, children } if !splits.is_taxonomy(*starter) => Some((*starter, children.clone())),
        _ => None,
    };
    if splits.is_taxonomy(s1) {
        return Err(Error::SwitchPattern("parent carries a taxonomy split"));
    }
    let p = splits.get(s1);
    let replacement = match kind {
        Switch::Orthogonal => {
            let (Some((l, lc)), Some((r, rc))) = (numeric(&children[0]), numeric(&children[1])) else {
                return Err(Error::SwitchPattern("both children must be numeric internal nodes"));
            };
            if l != r || splits.get(l).dim == p.dim {
                return Err(Error::SwitchPattern("children must share one orthogonal split"));
            }
            unit(
                l,
                vec![
                    unit(s1, vec![lc[0].clone(), rc[0].clone()]),
                    unit(s1, vec![lc[1].clone(), rc[1].clone()]),
                ],
            )
        }
        Switch::RotateLeft => {
            let Some((r, rc)) = numeric(&children[1]) else {
                return Err(Error::SwitchPattern("right child must be a numeric internal node"));
            };
            if splits.get(r).dim != p.dim || splits.get(r).position <= p.position {
                return Err(Error::SwitchPattern("right child split must be parallel and to the right"));
            }
            unit(r, vec![unit(s1, vec![children[0].clone(), rc[0].clone()]), rc[1].clone()])
        }
        Switch::RotateRight => {
            let Some((l, lc)) = numeric(&children[0]) else {
                return Err(Error::SwitchPattern("left child must be a numeric internal node"));
            };
            if splits.get(l).dim != p.dim || splits.get(l).position >= p.position {
                return Err(Error::SwitchPattern("left child split must be parallel and to the left"));
            }
            unit(l, vec![lc[0].clone(), unit(s1, vec![lc[1].clone(), children[1].clone()])])
        }
    };
    *node = replacement;
    Ok(shape.build(space))
}

fn shape_from_blocks(splits: &SplitSet, region: &[CellRange], blocks: Vec<&[CellRange]>) -> Result<UnitTree> {
    if blocks.len() == 1 && blocks[0] == region {
        return Ok(UnitTree::Leaf);
    }
    let malformed = || Error::MalformedTree("blocks do not form a hierarchical partition of the space".into());
    let separates = |id: SplitId| {
        splits.unit(id).all(|u| {
            let s = splits.get(u);
            blocks.iter().all(|b| b[s.dim].hi < s.position || b[s.dim].lo >= s.position)
        })
    };
    let s = splits
        .available(region)
        .into_iter()
        .filter(|&id| splits.is_starter(id))
        .find(|&id| separates(id))
        .ok_or_else(malformed)?;
    let dim = splits.get(s).dim;
    let regions = child_regions(splits, s, region);
    let mut children = Vec::with_capacity(regions.len());
    for r in &regions {
        let inside: Vec<&[CellRange]> = blocks
            .iter()
            .copied()
            .filter(|b| r[dim].lo <= b[dim].lo && b[dim].hi <= r[dim].hi)
            .collect();
        if inside.is_empty() {
            return Err(malformed());
        }
        children.push(shape_from_blocks(splits, r, inside)?);
    }
    Ok(unit(s, children))
}

/// Rebuilds the conflict-free tree whose leaves are exactly `blocks`.
pub fn tree_from_blocks(space: &Space, blocks: &[Box<[CellRange]>]) -> Result<PartitionTree> {
    let splits = space.splits();
    let full = splits.full_extent();
    for b in blocks {
        if b.len() != full.len() || b.iter().zip(&full).any(|(x, f)| x.lo < f.lo || x.hi > f.hi || x.lo > x.hi) {
            return Err(Error::MalformedTree(format!("block {b:?} is outside the space")));
        }
    }
    let shape = shape_from_blocks(splits, &full, blocks.iter().map(|b| &b[..]).collect())?;
    Ok(shape.build(space))
}
