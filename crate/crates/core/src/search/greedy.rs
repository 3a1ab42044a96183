use std::collections::HashMap;
use std::time::Instant;

use super::{ratio, Evaluator, SearchConfig, SearchResult, SearchStats};
use crate::dataset::{CellRange, SplitId};
use crate::enumeration::normalize;
use crate::error::{Error, Result};
use crate::metrics::block_cost;
use crate::partition::PartitionTree;
use crate::space::{Block, Space};

/// Best feasible split of a block and the cost decrease it brings.
fn best_split(ev: &Evaluator, block: &Block) -> Option<(f64, SplitId)> {
    let splits = ev.space.splits();
    let before = block_cost(block, &ev.params);
    let mut best: Option<(f64, SplitId)> = None;
    for s in PartitionTree::candidates(splits, block) {
        let mut rest = block.clone();
        let mut after = 0.0;
        let mut ok = true;
        for id in splits.unit(s) {
            let sp = splits.get(id);
            let (l, r) = ev.space.cut(&rest, sp.dim, sp.position);
            if ev.constraints.block_violation(splits, &r, false).is_some() {
                ok = false;
                break;
            }
            after += block_cost(&r, &ev.params);
            rest = l;
        }
        if !ok || ev.constraints.block_violation(splits, &rest, false).is_some() {
            continue;
        }
        after += block_cost(&rest, &ev.params);
        let gain = before - after;
        if gain > 0.0 && best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, s));
        }
    }
    best
}

/// Top-down greedy partitioning: repeatedly applies the feasible split with
/// the largest cost decrease anywhere in the current partition. The result
/// is rewritten into its conflict-free tree.
pub fn mondrian_greedy(space: &Space, cfg: &SearchConfig) -> Result<SearchResult> {
    let start = Instant::now();
    let ev = Evaluator::new(space, cfg)?;
    let mut tree = PartitionTree::new(space);
    if ev.constraints.check_all(space, &tree).is_some() {
        return Err(Error::Infeasible);
    }
    let mut memo: HashMap<Box<[CellRange]>, Option<(f64, SplitId)>> = HashMap::new();
    let mut stats = SearchStats::default();
    loop {
        let mut pick: Option<(f64, usize, SplitId)> = None;
        for (i, b) in tree.leaves().iter().enumerate() {
            let m = *memo.entry(b.extent.clone()).or_insert_with(|| {
                stats.generated += 1;
                best_split(&ev, b)
            });
            if let Some((gain, s)) = m {
                if pick.is_none_or(|(g, _, _)| gain > g) {
                    pick = Some((gain, i, s));
                }
            }
        }
        let Some((_, leaf, s)) = pick else { break };
        tree = tree.apply_split(space, leaf, s)?;
        stats.expanded += 1;
    }
    let tree = normalize(space, &tree);
    let cost = ev.cost(&tree);
    let lower = ev.static_bound().min(cost);
    stats.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(SearchResult {
        tree,
        cost,
        lower_bound: lower,
        ratio: ratio(cost, lower),
        certificate: false,
        budget_exhausted: false,
        stats,
    })
}
