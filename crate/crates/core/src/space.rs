//! The finest grid induced by the split set, with per-cell statistics.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dataset::{CellRange, Dataset, DimensionKind, SplitSet};

/// A partition block: a box of cells plus aggregate statistics of its tuples.
#[derive(Debug, Clone)]
pub struct Block {
    pub extent: Box<[CellRange]>,
    /// Indices of the nonempty finest cells inside the extent.
    pub cells: Arc<[u32]>,
    pub count: u32,
    /// Size of the largest class among the block's tuples (0 without a class attribute).
    pub majority: u32,
    /// Sensitive-value histogram (empty without a sensitive attribute).
    pub sensitive: Box<[u32]>,
    /// Normalized volume; the whole space has volume 1.
    pub volume: f64,
}

impl Block {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Nonempty finest cells of the space, in lexicographic coordinate order.
#[derive(Debug)]
pub struct Space {
    splits: Arc<SplitSet>,
    dataset: Arc<Dataset>,
    dims: usize,
    coords: Vec<u32>,
    counts: Vec<u32>,
    rows: Vec<Vec<u32>>,
    classes: usize,
    class_hist: Vec<u32>,
    majority: Vec<u32>,
    sensitive_values: usize,
    sensitive_hist: Vec<u32>,
    volumes: Vec<f64>,
    min_cell_volume: f64,
}

impl Space {
    pub fn new(dataset: Arc<Dataset>, splits: Arc<SplitSet>) -> Self {
        let schema = dataset.schema().clone();
        let dims = splits.dims().len();
        let class_attr = schema.class_label();
        let sensitive_attr = schema.sensitive();
        let classes = class_attr.map_or(0, |a| dataset.label_count(a));
        let sensitive_values = sensitive_attr.map_or(0, |a| dataset.label_count(a));

        let mut grouped: BTreeMap<Vec<u32>, Vec<u32>> = BTreeMap::new();
        for row in 0..dataset.len() {
            let key: Vec<u32> = splits
                .dims()
                .iter()
                .map(|dim| match dim.kind {
                    DimensionKind::Numeric { .. } => dim.numeric_cell(dataset.numeric(dim.attribute)[row]),
                    DimensionKind::Categorical { .. } => {
                        dim.categorical_cell(dataset.categorical(dim.attribute)[row])
                    }
                })
                .collect();
            grouped.entry(key).or_default().push(row as u32);
        }

        let mut space = Space {
            splits: splits.clone(),
            dataset: dataset.clone(),
            dims,
            coords: Vec::with_capacity(grouped.len() * dims),
            counts: Vec::with_capacity(grouped.len()),
            rows: Vec::with_capacity(grouped.len()),
            classes,
            class_hist: Vec::new(),
            majority: Vec::new(),
            sensitive_values,
            sensitive_hist: Vec::new(),
            volumes: Vec::new(),
            min_cell_volume: splits
                .dims()
                .iter()
                .map(|d| (0..d.cells()).map(|c| d.fraction(c, c)).fold(f64::INFINITY, f64::min))
                .product(),
        };
        for (key, rows) in grouped {
            let volume = key
                .iter()
                .enumerate()
                .map(|(d, &c)| splits.dim(d).fraction(c, c))
                .product();
            let mut hist = vec![0u32; classes];
            if let Some(a) = class_attr {
                let col = dataset.categorical(a);
                rows.iter().for_each(|&r| hist[col[r as usize] as usize] += 1);
            }
            space.majority.push(hist.iter().copied().max().unwrap_or(0));
            space.class_hist.extend(hist);
            let mut shist = vec![0u32; sensitive_values];
            if let Some(a) = sensitive_attr {
                let col = dataset.categorical(a);
                rows.iter().for_each(|&r| shist[col[r as usize] as usize] += 1);
            }
            space.sensitive_hist.extend(shist);
            space.coords.extend(key);
            space.counts.push(rows.len() as u32);
            space.volumes.push(volume);
            space.rows.push(rows);
        }
        space
    }

    pub fn splits(&self) -> &Arc<SplitSet> {
        &self.splits
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    /// Total number of tuples.
    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn cell_count(&self) -> usize {
        self.counts.len()
    }

    pub fn coords(&self, cell: u32) -> &[u32] {
        let c = cell as usize * self.dims;
        &self.coords[c..c + self.dims]
    }

    pub fn count(&self, cell: u32) -> u32 {
        self.counts[cell as usize]
    }

    pub fn rows(&self, cell: u32) -> &[u32] {
        &self.rows[cell as usize]
    }

    pub fn cell_majority(&self, cell: u32) -> u32 {
        self.majority[cell as usize]
    }

    pub fn cell_volume(&self, cell: u32) -> f64 {
        self.volumes[cell as usize]
    }

    /// Smallest normalized volume of any finest cell, empty or not.
    pub fn min_cell_volume(&self) -> f64 {
        self.min_cell_volume
    }

    pub fn has_class(&self) -> bool {
        self.dataset.schema().class_label().is_some()
    }

    pub fn has_sensitive(&self) -> bool {
        self.dataset.schema().sensitive().is_some()
    }

    pub fn sensitive_values(&self) -> usize {
        self.sensitive_values
    }

    /// Sensitive-value histogram of the whole table.
    pub fn global_sensitive(&self) -> Vec<u32> {
        let mut hist = vec![0u32; self.sensitive_values];
        for cell in 0..self.counts.len() {
            let h = &self.sensitive_hist[cell * self.sensitive_values..(cell + 1) * self.sensitive_values];
            hist.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        }
        hist
    }

    pub fn extent_volume(&self, extent: &[CellRange]) -> f64 {
        extent
            .iter()
            .enumerate()
            .map(|(d, r)| self.splits.dim(d).fraction(r.lo, r.hi))
            .product()
    }

    pub fn root_block(&self) -> Block {
        let cells: Vec<u32> = (0..self.counts.len() as u32).collect();
        self.make_block(self.splits.full_extent().into_boxed_slice(), cells)
    }

    /// Builds a block from its extent and cell list, aggregating statistics.
    pub fn make_block(&self, extent: Box<[CellRange]>, cells: Vec<u32>) -> Block {
        let mut count = 0;
        let mut classes = vec![0u32; self.classes];
        let mut sensitive = vec![0u32; self.sensitive_values];
        for &c in &cells {
            let c = c as usize;
            count += self.counts[c];
            let ch = &self.class_hist[c * self.classes..(c + 1) * self.classes];
            classes.iter_mut().zip(ch).for_each(|(a, b)| *a += b);
            let sh = &self.sensitive_hist[c * self.sensitive_values..(c + 1) * self.sensitive_values];
            sensitive.iter_mut().zip(sh).for_each(|(a, b)| *a += b);
        }
        let volume = self.extent_volume(&extent);
        Block {
            extent,
            cells: cells.into(),
            count,
            majority: classes.into_iter().max().unwrap_or(0),
            sensitive: sensitive.into_boxed_slice(),
            volume,
        }
    }

    /// Cuts `block` along dimension `dim` in front of cell `position`.
    pub fn cut(&self, block: &Block, dim: usize, position: u32) -> (Block, Block) {
        debug_assert!(block.extent[dim].lo < position && position <= block.extent[dim].hi);
        let (left_cells, right_cells): (Vec<u32>, Vec<u32>) = block
            .cells
            .iter()
            .partition(|&&c| self.coords(c)[dim] < position);
        let mut left_extent = block.extent.clone();
        left_extent[dim].hi = position - 1;
        let mut right_extent = block.extent.clone();
        right_extent[dim].lo = position;
        (
            self.make_block(left_extent, left_cells),
            self.make_block(right_extent, right_cells),
        )
    }

    /// Tuple ids of a block, sorted.
    pub fn block_rows(&self, block: &Block) -> Vec<u32> {
        let mut rows: Vec<u32> = block.cells.iter().flat_map(|&c| self.rows(c).iter().copied()).collect();
        rows.sort_unstable();
        rows
    }
}
