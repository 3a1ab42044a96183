use serde::{Deserialize, Serialize};

use super::PartitionTree;
use crate::dataset::{CellRange, DimensionKind};
use crate::enumeration::tree_from_blocks;
use crate::error::{Error, Result};
use crate::space::Space;

/// Generalized value of one quasi-identifier in an exported block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Extent {
    /// Values in `(low, high]`, or `[low, high]` when `low_closed`.
    Interval {
        attribute: String,
        low: f64,
        high: f64,
        low_closed: bool,
    },
    Category {
        attribute: String,
        node: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedBlock {
    pub extent: Vec<Extent>,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionExport {
    pub blocks: Vec<ExportedBlock>,
}

impl PartitionExport {
    pub fn new(tree: &PartitionTree, space: &Space) -> Self {
        let splits = space.splits();
        let blocks = tree
            .leaves()
            .iter()
            .map(|b| ExportedBlock {
                count: b.count,
                extent: b
                    .extent
                    .iter()
                    .enumerate()
                    .map(|(d, r)| {
                        let dim = splits.dim(d);
                        match &dim.kind {
                            DimensionKind::Numeric { .. } => Extent::Interval {
                                attribute: dim.name.clone(),
                                low: dim.bound(r.lo),
                                high: dim.bound(r.hi + 1),
                                low_closed: r.lo == 0,
                            },
                            DimensionKind::Categorical { taxonomy, .. } => Extent::Category {
                                attribute: dim.name.clone(),
                                node: taxonomy.node(splits.extent_node(d, *r)).label.clone(),
                            },
                        }
                    })
                    .collect(),
            })
            .collect();
        PartitionExport { blocks }
    }

    /// Reads the blocks back against a space over the same split set and
    /// rebuilds their tree. Block counts must match the data.
    pub fn to_tree(&self, space: &Space) -> Result<PartitionTree> {
        let splits = space.splits();
        let bad = |msg: String| Error::MalformedTree(msg);
        let mut extents = Vec::with_capacity(self.blocks.len());
        for (i, block) in self.blocks.iter().enumerate() {
            if block.extent.len() != splits.dims().len() {
                return Err(bad(format!("block {i} has {} attributes", block.extent.len())));
            }
            let mut ext = Vec::with_capacity(block.extent.len());
            for (d, e) in block.extent.iter().enumerate() {
                let dim = splits.dim(d);
                let range = match (&dim.kind, e) {
                    (DimensionKind::Numeric { .. }, Extent::Interval { attribute, low, high, .. }) if *attribute == dim.name => {
                        let boundary = |v: f64| (0..=dim.cells()).find(|&i| dim.bound(i) == v);
                        match (boundary(*low), boundary(*high)) {
                            (Some(lo), Some(hi)) if lo < hi => CellRange { lo, hi: hi - 1 },
                            _ => return Err(bad(format!("block {i}: ({low}, {high}] is not aligned with the splits of `{attribute}`"))),
                        }
                    }
                    (DimensionKind::Categorical { taxonomy, splittable }, Extent::Category { attribute, node }) if *attribute == dim.name => {
                        let n = taxonomy
                            .find(node)
                            .ok_or_else(|| bad(format!("block {i}: unknown category `{node}`")))?;
                        let (lo, hi) = taxonomy.node(n).leaves;
                        if *splittable {
                            CellRange { lo, hi }
                        } else if n == taxonomy.root() {
                            CellRange { lo: 0, hi: 0 }
                        } else {
                            return Err(bad(format!("block {i}: `{attribute}` is not generalized below the root")));
                        }
                    }
                    _ => return Err(bad(format!("block {i}: attribute {d} should be `{}`", dim.name))),
                };
                ext.push(range);
            }
            extents.push(ext.into_boxed_slice());
        }
        let tree = tree_from_blocks(space, &extents)?;
        let mut counts: Vec<(Box<[CellRange]>, u32)> = self.blocks.iter().zip(extents).map(|(b, e)| (e, b.count)).collect();
        counts.sort();
        let mut actual: Vec<(Box<[CellRange]>, u32)> = tree.leaves().iter().map(|b| (b.extent.clone(), b.count)).collect();
        actual.sort();
        if counts != actual {
            return Err(bad("block counts do not match the dataset".into()));
        }
        Ok(tree)
    }
}
