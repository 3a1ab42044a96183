use std::ops::Range;
use std::sync::Arc;

use super::data::Dataset;
use super::schema::{AttributeKind, Domain, SplitGenSpec, SplitStrategy};
use super::taxonomy::Taxonomy;
use crate::error::{Error, Result};

/// Global split priority; 1 is the highest priority.
pub type SplitId = u32;

#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    Numeric { value: f64 },
    /// Boundary in front of child `child` (>= 1) of taxonomy node `node`.
    Taxonomy { node: usize, child: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub id: SplitId,
    pub dim: usize,
    /// Index of the first cell on the right-hand side of the boundary.
    pub position: u32,
    pub kind: SplitKind,
}

#[derive(Debug, Clone)]
pub enum DimensionKind {
    Numeric { min: f64, max: f64, cuts: Vec<f64> },
    Categorical { taxonomy: Arc<Taxonomy>, splittable: bool },
}

/// One quasi-identifier axis of the partition space, discretized into cells.
#[derive(Debug, Clone)]
pub struct Dimension {
    pub attribute: usize,
    pub name: String,
    pub kind: DimensionKind,
}

impl Dimension {
    pub fn numeric(attribute: usize, name: &str, min: f64, max: f64, cuts: Vec<f64>) -> Self {
        Dimension {
            attribute,
            name: name.into(),
            kind: DimensionKind::Numeric { min, max, cuts },
        }
    }

    pub fn categorical(attribute: usize, name: &str, taxonomy: Arc<Taxonomy>, splittable: bool) -> Self {
        Dimension {
            attribute,
            name: name.into(),
            kind: DimensionKind::Categorical { taxonomy, splittable },
        }
    }

    pub fn cells(&self) -> u32 {
        match &self.kind {
            DimensionKind::Numeric { cuts, .. } => cuts.len() as u32 + 1,
            DimensionKind::Categorical { taxonomy, splittable } => {
                if *splittable {
                    taxonomy.leaf_count()
                } else {
                    1
                }
            }
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, DimensionKind::Numeric { .. })
    }

    /// Cell holding a numeric value; values equal to a cut fall on its left.
    pub fn numeric_cell(&self, v: f64) -> u32 {
        match &self.kind {
            DimensionKind::Numeric { cuts, .. } => cuts.partition_point(|&c| c < v) as u32,
            _ => panic!("not a numeric dimension"),
        }
    }

    /// Cell holding a categorical leaf position.
    pub fn categorical_cell(&self, leaf: u32) -> u32 {
        match &self.kind {
            DimensionKind::Categorical { splittable, .. } => {
                if *splittable {
                    leaf
                } else {
                    0
                }
            }
            _ => panic!("not a categorical dimension"),
        }
    }

    /// Numeric coordinate of cell boundary `i` (0 is the domain minimum).
    pub fn bound(&self, i: u32) -> f64 {
        match &self.kind {
            DimensionKind::Numeric { min, max, cuts } => {
                if i == 0 {
                    *min
                } else if i as usize > cuts.len() {
                    *max
                } else {
                    cuts[i as usize - 1]
                }
            }
            _ => panic!("not a numeric dimension"),
        }
    }

    /// Inclusive leaf-position range covered by cells `lo..=hi`.
    pub fn leaf_range(&self, lo: u32, hi: u32) -> (u32, u32) {
        match &self.kind {
            DimensionKind::Categorical { taxonomy, splittable } => {
                if *splittable {
                    (lo, hi)
                } else {
                    (0, taxonomy.leaf_count() - 1)
                }
            }
            _ => panic!("not a categorical dimension"),
        }
    }

    /// Fraction of the domain measure covered by cells `lo..=hi`.
    pub fn fraction(&self, lo: u32, hi: u32) -> f64 {
        match &self.kind {
            DimensionKind::Numeric { min, max, .. } => {
                if max > min {
                    (self.bound(hi + 1) - self.bound(lo)) / (max - min)
                } else {
                    1.0
                }
            }
            DimensionKind::Categorical { taxonomy, .. } => {
                let (a, b) = self.leaf_range(lo, hi);
                (b - a + 1) as f64 / taxonomy.leaf_count() as f64
            }
        }
    }
}

/// Globally ordered split set over the quasi-identifier dimensions.
#[derive(Debug, Clone)]
pub struct SplitSet {
    dims: Vec<Dimension>,
    splits: Vec<Split>,
    /// Per dimension, split id by boundary position (index 0 unused).
    by_position: Vec<Vec<Option<SplitId>>>,
    /// Per dimension, id range of the expansion of each taxonomy node.
    node_sets: Vec<Vec<Option<Range<SplitId>>>>,
}

impl SplitSet {
    /// Assigns ids dimension by dimension: numeric splits in increasing value
    /// order; taxonomy sibling sets breadth-first, each set consecutive with its
    /// rightmost boundary first.
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        let mut splits = Vec::new();
        let mut by_position = Vec::with_capacity(dims.len());
        let mut node_sets = Vec::with_capacity(dims.len());
        for (d, dim) in dims.iter().enumerate() {
            let mut positions = vec![None; dim.cells() as usize];
            let mut sets = Vec::new();
            match &dim.kind {
                DimensionKind::Numeric { min, max, cuts } => {
                    for (i, &value) in cuts.iter().enumerate() {
                        if !(value > *min && value < *max) {
                            return Err(Error::SplitOutsideDomain {
                                attribute: dim.name.clone(),
                                value,
                            });
                        }
                        if i > 0 && value <= cuts[i - 1] {
                            return Err(Error::DuplicateSplit {
                                attribute: dim.name.clone(),
                                value,
                            });
                        }
                        let id = splits.len() as SplitId + 1;
                        positions[i + 1] = Some(id);
                        splits.push(Split {
                            id,
                            dim: d,
                            position: i as u32 + 1,
                            kind: SplitKind::Numeric { value },
                        });
                    }
                }
                DimensionKind::Categorical { taxonomy, splittable } => {
                    sets = vec![None; taxonomy.nodes().len()];
                    if *splittable {
                        taxonomy.check_no_single_child()?;
                        for node in taxonomy.internal_nodes_bfs() {
                            let children = &taxonomy.node(node).children;
                            let first = splits.len() as SplitId + 1;
                            for child in (1..children.len()).rev() {
                                let id = splits.len() as SplitId + 1;
                                let position = taxonomy.node(children[child]).leaves.0;
                                positions[position as usize] = Some(id);
                                splits.push(Split {
                                    id,
                                    dim: d,
                                    position,
                                    kind: SplitKind::Taxonomy {
                                        node,
                                        child: child as u32,
                                    },
                                });
                            }
                            sets[node] = Some(first..splits.len() as SplitId + 1);
                        }
                    }
                }
            }
            by_position.push(positions);
            node_sets.push(sets);
        }
        Ok(SplitSet {
            dims,
            splits,
            by_position,
            node_sets,
        })
    }

    /// Builds the split set for the quasi-identifiers of `ds` following `spec`.
    pub fn generate(ds: &Dataset, spec: &SplitGenSpec) -> Result<Self> {
        let schema = ds.schema();
        let mut dims = Vec::new();
        for idx in schema.quasi_identifiers() {
            let attr = schema.attribute(idx);
            let strategy = spec.strategies.get(idx).cloned().flatten();
            let invalid = |reason: &str| Error::InvalidSplitSpec {
                attribute: attr.name.clone(),
                reason: reason.into(),
            };
            match (&attr.kind, &attr.domain) {
                (AttributeKind::Numeric, Domain::Interval { min, max }) => {
                    let (min, max) = (*min, *max);
                    let cuts = match strategy {
                        None => return Err(Error::MissingSplitSpec(attr.name.clone())),
                        Some(SplitStrategy::Explicit(values)) => values,
                        Some(SplitStrategy::EquiWidth(c)) => {
                            if c == 0 {
                                return Err(invalid("equi-width count must be at least 1"));
                            }
                            if max <= min {
                                return Err(Error::SplitOutsideDomain {
                                    attribute: attr.name.clone(),
                                    value: min,
                                });
                            }
                            (1..=c)
                                .map(|i| min + i as f64 * (max - min) / (c as f64 + 1.0))
                                .collect()
                        }
                        Some(SplitStrategy::Quantile(c)) => {
                            if c == 0 {
                                return Err(invalid("quantile count must be at least 1"));
                            }
                            quantile_cuts(ds.numeric(idx), c)
                        }
                        Some(SplitStrategy::Taxonomy) => {
                            return Err(invalid("taxonomy splits need a categorical attribute"))
                        }
                    };
                    dims.push(Dimension::numeric(idx, &attr.name, min, max, cuts));
                }
                (AttributeKind::Categorical, Domain::Taxonomy(tax)) => {
                    let splittable = match strategy {
                        None | Some(SplitStrategy::Taxonomy) => true,
                        Some(SplitStrategy::Explicit(v)) if v.is_empty() => false,
                        Some(_) => {
                            return Err(invalid("categorical attributes only take taxonomy splits"))
                        }
                    };
                    dims.push(Dimension::categorical(idx, &attr.name, tax.clone(), splittable));
                }
                _ => return Err(Error::Schema(format!("attribute `{}` cannot be partitioned", attr.name))),
            }
        }
        Self::new(dims)
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    pub fn get(&self, id: SplitId) -> &Split {
        &self.splits[id as usize - 1]
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn dim(&self, d: usize) -> &Dimension {
        &self.dims[d]
    }

    pub fn has_taxonomy_splits(&self) -> bool {
        self.splits.iter().any(|s| matches!(s.kind, SplitKind::Taxonomy { .. }))
    }

    pub fn is_taxonomy(&self, id: SplitId) -> bool {
        matches!(self.get(id).kind, SplitKind::Taxonomy { .. })
    }

    /// All ids of the expansion unit containing `id` (a singleton for numeric splits).
    pub fn unit(&self, id: SplitId) -> Range<SplitId> {
        match self.get(id).kind {
            SplitKind::Numeric { .. } => id..id + 1,
            SplitKind::Taxonomy { node, .. } => self.node_sets[self.get(id).dim][node]
                .clone()
                .expect("taxonomy split belongs to a set"),
        }
    }

    /// The first split applied by the unit containing `id`.
    pub fn starter(&self, id: SplitId) -> SplitId {
        self.unit(id).start
    }

    pub fn is_starter(&self, id: SplitId) -> bool {
        self.starter(id) == id
    }

    /// Split ids usable inside the cell box `extent`, in increasing id order.
    /// Numeric splits strictly inside the box, plus the expansion of the taxonomy
    /// node that a categorical extent denotes.
    pub fn available(&self, extent: &[CellRange]) -> Vec<SplitId> {
        let mut out = Vec::new();
        for (d, r) in extent.iter().enumerate() {
            match &self.dims[d].kind {
                DimensionKind::Numeric { .. } => {
                    out.extend((r.lo + 1..=r.hi).filter_map(|p| self.by_position[d][p as usize]));
                }
                DimensionKind::Categorical { taxonomy, splittable } => {
                    if *splittable {
                        if let Some(node) = taxonomy.node_for_range(r.lo, r.hi) {
                            if let Some(set) = &self.node_sets[d][node] {
                                out.extend(set.clone());
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Taxonomy node covered by a categorical extent.
    pub fn extent_node(&self, d: usize, r: CellRange) -> usize {
        match &self.dims[d].kind {
            DimensionKind::Categorical { taxonomy, .. } => {
                let (a, b) = self.dims[d].leaf_range(r.lo, r.hi);
                taxonomy
                    .node_for_range(a, b)
                    .expect("categorical extents always denote a taxonomy node")
            }
            _ => panic!("not a categorical dimension"),
        }
    }

    /// Whole-space extent.
    pub fn full_extent(&self) -> Vec<CellRange> {
        self.dims
            .iter()
            .map(|d| CellRange { lo: 0, hi: d.cells() - 1 })
            .collect()
    }
}

/// Inclusive range of cells along one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellRange {
    pub lo: u32,
    pub hi: u32,
}

impl CellRange {
    pub fn contains(&self, c: u32) -> bool {
        self.lo <= c && c <= self.hi
    }
}

/// Cuts splitting sorted data at ranks floor(i N / (c + 1)), placed at the
/// midpoint to the next distinct value.
fn quantile_cuts(values: &[f64], c: u32) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = Vec::new();
    for i in 1..=c as usize {
        let rank = (i * n) / (c as usize + 1);
        if rank == 0 {
            continue;
        }
        let x = sorted[rank - 1];
        if let Some(&y) = sorted[rank..].iter().find(|&&y| y > x) {
            let cut = x + (y - x) / 2.0;
            if cuts.last().is_none_or(|&l| cut > l) {
                cuts.push(cut);
            }
        }
    }
    cuts
}
