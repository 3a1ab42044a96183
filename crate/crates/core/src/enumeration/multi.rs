use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::dataset::CellRange;
use crate::error::{Error, Result};
use crate::partition::PartitionTree;
use crate::space::Space;

pub const MULTI_ENUMERATE_MAX_SPLITS: usize = 8;

/// Visits every timestamped tree that satisfies the timestamp order alone,
/// so each partition shows up once per tree that can denote it.
pub fn multi_enumerate_visit<F>(space: &Space, mut visitor: F) -> Result<u64>
where
    F: FnMut(&PartitionTree) -> ControlFlow<()>,
{
    if space.splits().len() > MULTI_ENUMERATE_MAX_SPLITS {
        return Err(Error::SizeGuard(format!(
            "{} splits, at most {MULTI_ENUMERATE_MAX_SPLITS} allowed",
            space.splits().len()
        )));
    }
    let splits = space.splits();
    let mut count = 0;
    let mut stack = vec![PartitionTree::new(space)];
    while let Some(tree) = stack.pop() {
        count += 1;
        if visitor(&tree).is_break() {
            break;
        }
        for leaf in tree.eligible_leaves().rev() {
            let block = tree.leaf(leaf).expect("eligible leaf exists");
            for s in PartitionTree::candidates(splits, block).into_iter().rev() {
                stack.push(tree.apply_split(space, leaf, s).expect("candidate split applies"));
            }
        }
    }
    Ok(count)
}

/// Collects every timestamp-ordered tree, refusing to hold more than `cap`.
pub fn multi_enumerate(space: &Space, cap: usize) -> Result<Vec<PartitionTree>> {
    let mut out = Vec::new();
    let mut overflow = false;
    multi_enumerate_visit(space, |t| {
        if out.len() == cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        out.push(t.clone());
        ControlFlow::Continue(())
    })?;
    if overflow {
        return Err(Error::SizeGuard(format!("more than {cap} trees")));
    }
    Ok(out)
}

/// Counts timestamp-ordered trees without building them: a region admits the
/// undivided tree plus, for each applicable split, one tree per combination
/// of trees in the resulting sub-regions.
pub fn inductive_count(space: &Space) -> u128 {
    fn go(space: &Space, extent: Vec<CellRange>, memo: &mut HashMap<Vec<CellRange>, u128>) -> u128 {
        if let Some(&c) = memo.get(&extent) {
            return c;
        }
        let splits = space.splits();
        let mut total = 1u128;
        for s in splits.available(&extent) {
            if !splits.is_starter(s) {
                continue;
            }
            let mut product = 1u128;
            let mut rest = extent.clone();
            for id in splits.unit(s) {
                let sp = splits.get(id);
                let mut right = rest.clone();
                right[sp.dim].lo = sp.position;
                rest[sp.dim].hi = sp.position - 1;
                product = product.saturating_mul(go(space, right, memo));
            }
            product = product.saturating_mul(go(space, rest, memo));
            total = total.saturating_add(product);
        }
        memo.insert(extent, total);
        total
    }
    go(space, space.splits().full_extent(), &mut HashMap::new())
}
