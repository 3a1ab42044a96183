//! Information-loss costs of a partition and the uniform-density count estimate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{DimensionKind, SplitSet};
use crate::error::{Error, Result};
use crate::partition::PartitionTree;
use crate::space::{Block, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Dm,
    Cm,
    Vm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub metric: Metric,
    /// Floor on the per-tuple charge inside lower bounds (DM).
    pub k: u32,
    /// Normalized volume charged as 1 per tuple (VM).
    pub unit_volume: f64,
}

impl MetricParams {
    /// Parameters with the unit volume set to the smallest finest cell, so a
    /// tuple alone in its cell is charged at least 1.
    pub fn new(metric: Metric, k: u32, space: &Space) -> Self {
        MetricParams {
            metric,
            k,
            unit_volume: space.min_cell_volume(),
        }
    }

    /// Checks parameter ranges and that the space supports the metric.
    pub fn validate(&self, space: &Space) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.unit_volume > 0.0 && self.unit_volume.is_finite()) {
            return Err(Error::InvalidParameter("unit volume must be positive".into()));
        }
        match self.metric {
            Metric::Cm if !space.has_class() => Err(Error::MissingClassAttribute),
            Metric::Vm if space.min_cell_volume() <= 0.0 => Err(Error::InvalidParameter(
                "a finest cell has zero volume; VM is undefined on this split set".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Exact cost contributed by one block.
pub fn block_cost(block: &Block, params: &MetricParams) -> f64 {
    let m = block.count as f64;
    match params.metric {
        Metric::Dm => m * m,
        Metric::Cm => (block.count - block.majority) as f64,
        Metric::Vm => m * block.volume / params.unit_volume,
    }
}

/// Σ of squared block sizes.
pub fn dm_cost(tree: &PartitionTree) -> f64 {
    tree.leaves().iter().map(|b| (b.count as f64).powi(2)).sum()
}

/// Number of tuples outside a majority class of their block. With tied
/// majorities, one tied class counts as the majority.
pub fn cm_cost(space: &Space, tree: &PartitionTree) -> Result<u64> {
    if !space.has_class() {
        return Err(Error::MissingClassAttribute);
    }
    Ok(tree.leaves().iter().map(|b| (b.count - b.majority) as u64).sum())
}

/// Σ over tuples of the normalized volume of their block, in units of `unit_volume`.
pub fn vm_cost(tree: &PartitionTree, unit_volume: f64) -> Result<f64> {
    let mut total = 0.0;
    for b in tree.leaves() {
        if b.count > 0 && b.volume <= 0.0 {
            return Err(Error::InvalidParameter("block with tuples has zero volume".into()));
        }
        total += b.count as f64 * b.volume / unit_volume;
    }
    Ok(total)
}

pub fn cost(space: &Space, tree: &PartitionTree, params: &MetricParams) -> Result<f64> {
    match params.metric {
        Metric::Dm => Ok(dm_cost(tree)),
        Metric::Cm => cm_cost(space, tree).map(|c| c as f64),
        Metric::Vm => vm_cost(tree, params.unit_volume),
    }
}

/// Condition on one attribute: a numeric interval `(min, max]` (closed at
/// the domain minimum) or a set of taxonomy labels, where an internal label
/// stands for all leaves below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predicate {
    Interval { min: f64, max: f64 },
    Values(Vec<String>),
}

/// A conjunctive count query; attributes left out span their whole domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeQuery {
    #[serde(default)]
    pub name: String,
    pub predicates: BTreeMap<String, Predicate>,
}

impl RangeQuery {
    pub fn load_list(path: &std::path::Path) -> Result<Vec<RangeQuery>> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
enum DimQuery {
    All,
    Interval { min: f64, max: f64, domain_min: f64 },
    Leaves(Vec<bool>),
}

/// A query checked against the split set's dimensions.
#[derive(Debug, Clone)]
pub struct ResolvedQuery {
    dims: Vec<DimQuery>,
    /// (attribute index, predicate) pairs for row-level evaluation.
    rows: Vec<(usize, DimQuery)>,
}

impl ResolvedQuery {
    pub fn new(splits: &SplitSet, q: &RangeQuery) -> Result<Self> {
        let mut dims = vec![DimQuery::All; splits.dims().len()];
        let mut rows = Vec::new();
        for (name, pred) in &q.predicates {
            let d = splits
                .dims()
                .iter()
                .position(|d| &d.name == name)
                .ok_or_else(|| Error::InvalidParameter(format!("query on `{name}`, which is not a quasi-identifier")))?;
            let dim = splits.dim(d);
            let resolved = match (&dim.kind, pred) {
                (DimensionKind::Numeric { min: lo, max: hi, .. }, Predicate::Interval { min, max }) => {
                    if !(min <= max && min >= lo && max <= hi) {
                        return Err(Error::InvalidParameter(format!(
                            "query interval ({min}, {max}] on `{name}` is outside [{lo}, {hi}]"
                        )));
                    }
                    DimQuery::Interval {
                        min: *min,
                        max: *max,
                        domain_min: *lo,
                    }
                }
                (DimensionKind::Categorical { taxonomy, .. }, Predicate::Values(labels)) => {
                    let mut mask = vec![false; taxonomy.leaf_count() as usize];
                    for label in labels {
                        let node = taxonomy.find(label).ok_or_else(|| {
                            Error::InvalidParameter(format!("`{label}` is not in the taxonomy of `{name}`"))
                        })?;
                        let (a, b) = taxonomy.node(node).leaves;
                        mask[a as usize..=b as usize].iter_mut().for_each(|m| *m = true);
                    }
                    DimQuery::Leaves(mask)
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "predicate kind does not match attribute `{name}`"
                    )))
                }
            };
            rows.push((dim.attribute, resolved.clone()));
            dims[d] = resolved;
        }
        Ok(ResolvedQuery { dims, rows })
    }

    /// Fraction of a block's measure inside the query.
    fn overlap(&self, splits: &SplitSet, block: &Block) -> f64 {
        let mut f = 1.0;
        for (d, q) in self.dims.iter().enumerate() {
            let r = block.extent[d];
            let dim = splits.dim(d);
            f *= match q {
                DimQuery::All => 1.0,
                DimQuery::Interval { min, max, domain_min } => {
                    let (a, b) = (dim.bound(r.lo), dim.bound(r.hi + 1));
                    if b > a {
                        (b.min(*max) - a.max(*min)).max(0.0) / (b - a)
                    } else if b <= *max && (b > *min || *min <= *domain_min) {
                        1.0
                    } else {
                        0.0
                    }
                }
                DimQuery::Leaves(mask) => {
                    let (a, b) = dim.leaf_range(r.lo, r.hi);
                    let hit = mask[a as usize..=b as usize].iter().filter(|&&m| m).count();
                    hit as f64 / (b - a + 1) as f64
                }
            };
            if f == 0.0 {
                break;
            }
        }
        f
    }

    fn matches(&self, space: &Space, row: usize) -> bool {
        let ds = space.dataset();
        self.rows.iter().all(|(attr, q)| match q {
            DimQuery::All => true,
            DimQuery::Interval { min, max, domain_min } => {
                let v = ds.numeric(*attr)[row];
                v <= *max && (v > *min || *min <= *domain_min)
            }
            DimQuery::Leaves(mask) => mask[ds.categorical(*attr)[row] as usize],
        })
    }
}

/// Estimated number of tuples in the query, assuming tuples are spread
/// uniformly inside each block.
pub fn count_estimate(space: &Space, tree: &PartitionTree, q: &ResolvedQuery) -> f64 {
    tree.leaves()
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 * q.overlap(space.splits(), b))
        .sum()
}

pub fn true_count(space: &Space, q: &ResolvedQuery) -> u64 {
    (0..space.dataset().len()).filter(|&r| q.matches(space, r)).count() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub name: String,
    pub estimate: f64,
    pub actual: u64,
    pub relative_error: f64,
}

pub fn query_error_report(space: &Space, tree: &PartitionTree, queries: &[RangeQuery]) -> Result<Vec<QueryReport>> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let resolved = ResolvedQuery::new(space.splits(), q)?;
            let estimate = count_estimate(space, tree, &resolved);
            let actual = true_count(space, &resolved);
            Ok(QueryReport {
                name: if q.name.is_empty() { format!("query{}", i + 1) } else { q.name.clone() },
                estimate,
                actual,
                relative_error: (estimate - actual as f64).abs() / (actual.max(1) as f64),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{axis, line_space, numeric_space, working_class_salary};

    fn build(space: &Space, steps: &[(usize, u32)]) -> PartitionTree {
        steps.iter().fold(PartitionTree::new(space), |t, &(l, s)| t.apply_split(space, l, s).unwrap())
    }

    #[test]
    fn dm_of_line_partition() {
        let space = line_space(&[2, 2, 2, 2, 2, 1, 1, 3, 0]);
        let t = build(&space, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 6)]);
        assert_eq!(dm_cost(&t), 41.0);
        assert_eq!(dm_cost(&PartitionTree::new(&space)), 225.0);
    }

    #[test]
    fn cm_ties_charge_the_other_class() {
        let pts: Vec<Vec<f64>> = vec![vec![0.5], vec![0.5], vec![1.5], vec![1.5], vec![1.5]];
        let space = numeric_space(&[axis("x", 0.0, 2.0, &[1.0])], &pts, Some(&[0, 1, 0, 0, 1]));
        assert_eq!(cm_cost(&space, &PartitionTree::new(&space)).unwrap(), 2);
        let t = build(&space, &[(0, 1)]);
        // {a, b} is a tie: one pays; {a, a, b}: one pays.
        assert_eq!(cm_cost(&space, &t).unwrap(), 2);
        assert!(matches!(cm_cost(&line_space(&[1, 1]), &t), Err(Error::MissingClassAttribute)));
    }

    #[test]
    fn vm_unit_cells_charge_one() {
        let space = line_space(&[1, 2, 3, 4]);
        let unit = space.min_cell_volume();
        let root = PartitionTree::new(&space);
        assert!((vm_cost(&root, unit).unwrap() - 10.0 / unit).abs() < 1e-9);
        let finest = build(&space, &[(0, 1), (1, 2), (2, 3)]);
        assert!((vm_cost(&finest, unit).unwrap() - 10.0).abs() < 1e-9);
    }

    fn query(pairs: &[(&str, Predicate)]) -> RangeQuery {
        RangeQuery {
            name: String::new(),
            predicates: pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    #[test]
    fn estimates_half_of_a_block() {
        let space = line_space(&[10, 0]);
        let t = PartitionTree::new(&space);
        let q = ResolvedQuery::new(space.splits(), &query(&[("x", Predicate::Interval { min: 0.0, max: 1.0 })])).unwrap();
        assert!((count_estimate(&space, &t, &q) - 5.0).abs() < 1e-12);
        assert_eq!(true_count(&space, &q), 10);
        let all = ResolvedQuery::new(space.splits(), &query(&[])).unwrap();
        assert_eq!(count_estimate(&space, &t, &all), 10.0);
    }

    #[test]
    fn categorical_query_by_internal_label() {
        let space = working_class_salary();
        let t = build(&space, &[(0, 1)]);
        let q = query(&[
            ("workclass", Predicate::Values(vec!["Government".into()])),
            ("salary", Predicate::Interval { min: 0.0, max: 2.0 }),
        ]);
        let report = query_error_report(&space, &t, &[q]).unwrap();
        assert_eq!(report[0].actual, 6);
        assert!((report[0].estimate - 6.0).abs() < 1e-12);
        assert_eq!(report[0].relative_error, 0.0);
        let bad = query(&[("workclass", Predicate::Interval { min: 0.0, max: 1.0 })]);
        assert!(ResolvedQuery::new(space.splits(), &bad).is_err());
        let outside = query(&[("salary", Predicate::Interval { min: -1.0, max: 1.0 })]);
        assert!(ResolvedQuery::new(space.splits(), &outside).is_err());
    }

    #[test]
    fn query_json_shape() {
        let text = r#"[{"name": "q", "predicates": {"age": {"min": 20, "max": 30}, "sex": ["Male"]}}]"#;
        let qs: Vec<RangeQuery> = serde_json::from_str(text).unwrap();
        assert_eq!(qs[0].predicates["age"], Predicate::Interval { min: 20.0, max: 30.0 });
        assert_eq!(qs[0].predicates["sex"], Predicate::Values(vec!["Male".into()]));
    }
}
