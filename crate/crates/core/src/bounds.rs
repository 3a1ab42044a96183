//! Lower bounds on the cost of every partition below an enumeration node.

use std::num::NonZeroUsize;

use lru::LruCache;
use parking_lot::Mutex;

use crate::dataset::CellRange;
use crate::metrics::{block_cost, Metric, MetricParams};
use crate::partition::PartitionTree;
use crate::space::{Block, Space};

/// Blocks with fewer finest cells than this are summed directly.
const CACHE_MIN_CELLS: usize = 16;
pub const DEFAULT_CACHE_BYTES: usize = 64 << 20;

/// Cost of one finest cell in the best case.
fn cell_floor(space: &Space, params: &MetricParams, cell: u32) -> f64 {
    let m = space.count(cell) as f64;
    match params.metric {
        Metric::Dm => m * m.max(params.k as f64),
        Metric::Cm => (space.count(cell) - space.cell_majority(cell)) as f64,
        Metric::Vm => m * space.cell_volume(cell) / params.unit_volume,
    }
}

pub struct BoundContext<'a> {
    space: &'a Space,
    params: MetricParams,
    cache: Mutex<LruCache<Box<[CellRange]>, f64>>,
}

impl<'a> BoundContext<'a> {
    pub fn new(space: &'a Space, params: MetricParams) -> Self {
        Self::with_cache_bytes(space, params, DEFAULT_CACHE_BYTES)
    }

    pub fn with_cache_bytes(space: &'a Space, params: MetricParams, bytes: usize) -> Self {
        let entry = std::mem::size_of::<CellRange>() * space.splits().dims().len() + 64;
        let cap = NonZeroUsize::new((bytes / entry).max(1)).unwrap();
        BoundContext {
            space,
            params,
            cache: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    /// Cost of the block refined by every split available inside it,
    /// charging each tuple of a sub-k cell as if it sat in a block of k.
    pub fn min_cost(&self, block: &Block) -> f64 {
        if block.cells.len() < CACHE_MIN_CELLS {
            return self.sum_cells(block);
        }
        if let Some(&v) = self.cache.lock().get(&block.extent) {
            return v;
        }
        let v = self.sum_cells(block);
        self.cache.lock().put(block.extent.clone(), v);
        v
    }

    fn sum_cells(&self, block: &Block) -> f64 {
        block.cells.iter().map(|&c| cell_floor(self.space, &self.params, c)).sum()
    }

    /// Frozen leaves are charged their exact cost, leaves that descendants
    /// may still split are charged their finest-refinement floor.
    pub fn lb(&self, tree: &PartitionTree) -> f64 {
        let eligible = tree.eligible_leaves();
        tree.leaves()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                if eligible.contains(&i) {
                    self.min_cost(b)
                } else {
                    block_cost(b, &self.params)
                }
            })
            .sum()
    }

    /// A bound that holds for every feasible partition of the data.
    pub fn global_theoretical_bound(&self) -> f64 {
        global_theoretical_bound(self.space, &self.params)
    }
}

/// DM: N·k; CM: 0; VM: N (each tuple occupies at least one unit cell).
pub fn global_theoretical_bound(space: &Space, params: &MetricParams) -> f64 {
    let n = space.n() as f64;
    match params.metric {
        Metric::Dm => n * params.k as f64,
        Metric::Cm => 0.0,
        Metric::Vm => n * space.min_cell_volume() / params.unit_volume,
    }
}
