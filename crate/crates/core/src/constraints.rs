//! Per-block privacy predicates and their conjunction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{DimensionKind, SplitSet};
use crate::error::{Error, Result};
use crate::partition::PartitionTree;
use crate::space::{Block, Space};

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCloseness {
    pub t: f64,
    #[serde(default)]
    pub assume_monotone: bool,
}

/// Realistic class-II adversary bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsPrivacy {
    pub eps: f64,
    pub sigma: f64,
    pub b: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub assume_monotone: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub k: Option<u32>,
    /// Minimum block edge length per numeric attribute.
    #[serde(default)]
    pub min_lengths: Vec<(String, f64)>,
    pub l: Option<f64>,
    pub t: Option<TCloseness>,
    pub eps: Option<EpsPrivacy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    KAnonymity,
    MinLength,
    LDiversity,
    TCloseness,
    EpsPrivacy,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::KAnonymity => "k-anonymity",
            ConstraintKind::MinLength => "length restriction",
            ConstraintKind::LDiversity => "entropy l-diversity",
            ConstraintKind::TCloseness => "t-closeness",
            ConstraintKind::EpsPrivacy => "eps-privacy",
        })
    }
}

/// First violated constraint and the pre-order index of the offending block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub block: usize,
}

pub fn k_anonymous(block: &Block, k: u32) -> bool {
    block.count == 0 || block.count >= k
}

/// Edge length of a block along numeric dimension `d`.
pub fn edge_length(splits: &SplitSet, block: &Block, d: usize) -> f64 {
    let r = block.extent[d];
    let dim = splits.dim(d);
    dim.bound(r.hi + 1) - dim.bound(r.lo)
}

/// Natural-log entropy of a histogram.
pub fn entropy(hist: &[u32]) -> f64 {
    let n: u32 = hist.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub fn l_diverse(block: &Block, l: f64) -> bool {
    block.count == 0 || entropy(&block.sensitive) + TOLERANCE >= l.ln()
}

/// Earth mover's distance between two distributions over an ordered domain
/// of m values with unit ground distance between neighbours.
pub fn ordered_emd(p: &[f64], q: &[f64]) -> f64 {
    let m = p.len();
    let mut cum = 0.0;
    let mut total = 0.0;
    for (a, b) in p.iter().zip(q) {
        cum += a - b;
        total += cum.abs();
    }
    total / (m - 1) as f64
}

pub fn distribution(hist: &[u32]) -> Vec<f64> {
    let n: u32 = hist.iter().sum();
    hist.iter().map(|&c| c as f64 / n as f64).collect()
}

pub fn t_close(block: &Block, t: f64, global: &[f64]) -> bool {
    block.count == 0 || ordered_emd(&distribution(&block.sensitive), global) <= t + TOLERANCE
}

/// Conditions R1 and R2 of the class-II adversary for one block.
pub fn eps_private(block: &Block, e: &EpsPrivacy) -> bool {
    if block.count == 0 {
        return true;
    }
    let n = block.count as f64;
    let r1 = n - e.b >= (e.sigma + e.b) / (e.eps - 1.0);
    let eps_prime = e.eps * (1.0 - 1.0 / (e.sigma + e.b));
    let cap = 1.0 - 1.0 / (eps_prime + e.delta);
    let r2 = block.sensitive.iter().all(|&c| c as f64 / (n + e.b) <= cap + TOLERANCE);
    r1 && r2
}

/// A constraint set checked against a space, ready for per-block evaluation.
#[derive(Debug, Clone)]
pub struct Constraints {
    k: Option<u32>,
    min_lengths: Vec<(usize, f64)>,
    l: Option<f64>,
    t: Option<TCloseness>,
    eps: Option<EpsPrivacy>,
    global: Vec<f64>,
}

impl Constraints {
    pub fn new(space: &Space, cs: &ConstraintSet) -> Result<Self> {
        let splits = space.splits();
        if cs.k == Some(0) {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let mut min_lengths = Vec::new();
        for (name, len) in &cs.min_lengths {
            let d = splits
                .dims()
                .iter()
                .position(|d| &d.name == name)
                .ok_or_else(|| Error::InvalidParameter(format!("length restriction on unknown attribute `{name}`")))?;
            if !matches!(splits.dim(d).kind, DimensionKind::Numeric { .. }) {
                return Err(Error::InvalidParameter(format!(
                    "length restriction on categorical attribute `{name}`"
                )));
            }
            if len.is_nan() || *len < 0.0 {
                return Err(Error::InvalidParameter(format!("negative minimum length for `{name}`")));
            }
            min_lengths.push((d, *len));
        }
        let needs_sensitive = cs.l.is_some() || cs.t.is_some() || cs.eps.is_some();
        if needs_sensitive && !space.has_sensitive() {
            return Err(Error::MissingSensitiveAttribute);
        }
        if let Some(l) = cs.l {
            if l.is_nan() || l <= 1.0 {
                return Err(Error::InvalidParameter("l must exceed 1".into()));
            }
        }
        if let Some(t) = cs.t {
            if !(0.0..=1.0).contains(&t.t) {
                return Err(Error::InvalidParameter("t must lie in [0, 1]".into()));
            }
            if space.sensitive_values() < 2 {
                return Err(Error::InvalidParameter(
                    "t-closeness needs at least two sensitive values".into(),
                ));
            }
        }
        if let Some(e) = cs.eps {
            if e.eps.is_nan() || e.eps <= 1.0 {
                return Err(Error::InvalidParameter("eps must exceed 1".into()));
            }
            if !(e.sigma >= 0.0 && e.b >= 0.0) {
                return Err(Error::InvalidParameter("sigma and b must be non-negative".into()));
            }
            if e.sigma + e.b == 0.0 {
                return Err(Error::InvalidParameter("sigma + b must be positive".into()));
            }
        }
        let global = if space.has_sensitive() {
            distribution(&space.global_sensitive())
        } else {
            Vec::new()
        };
        Ok(Constraints {
            k: cs.k,
            min_lengths,
            l: cs.l,
            t: cs.t,
            eps: cs.eps,
            global,
        })
    }

    /// No constraints at all.
    pub fn none() -> Self {
        Constraints {
            k: None,
            min_lengths: Vec::new(),
            l: None,
            t: None,
            eps: None,
            global: Vec::new(),
        }
    }

    pub fn k(&self) -> Option<u32> {
        self.k
    }

    /// First constraint the block violates. With `monotone_only`, only
    /// constraints whose violation survives further splitting are checked.
    pub fn block_violation(&self, splits: &SplitSet, block: &Block, monotone_only: bool) -> Option<ConstraintKind> {
        if let Some(k) = self.k {
            if !k_anonymous(block, k) {
                return Some(ConstraintKind::KAnonymity);
            }
        }
        for &(d, len) in &self.min_lengths {
            if edge_length(splits, block, d) + TOLERANCE < len {
                return Some(ConstraintKind::MinLength);
            }
        }
        if let Some(l) = self.l {
            if !l_diverse(block, l) {
                return Some(ConstraintKind::LDiversity);
            }
        }
        if let Some(t) = self.t {
            if (!monotone_only || t.assume_monotone) && !t_close(block, t.t, &self.global) {
                return Some(ConstraintKind::TCloseness);
            }
        }
        if let Some(e) = self.eps {
            if (!monotone_only || e.assume_monotone) && !eps_private(block, &e) {
                return Some(ConstraintKind::EpsPrivacy);
            }
        }
        None
    }

    /// First violating block of the partition, if any.
    pub fn check_all(&self, space: &Space, tree: &PartitionTree) -> Option<Violation> {
        self.check_blocks(space.splits(), &tree.leaves(), false)
    }

    /// Like [`Constraints::check_all`] but only with constraints that are
    /// used for pruning subtrees.
    pub fn check_prunable(&self, space: &Space, tree: &PartitionTree) -> Option<Violation> {
        self.check_blocks(space.splits(), &tree.leaves(), true)
    }

    fn check_blocks<B: AsRef<Block>>(&self, splits: &SplitSet, blocks: &[B], monotone_only: bool) -> Option<Violation> {
        blocks.iter().enumerate().find_map(|(i, b)| {
            self.block_violation(splits, b.as_ref(), monotone_only)
                .map(|constraint| Violation { constraint, block: i })
        })
    }
}

/// First block smaller than k (and nonempty).
pub fn check_k_anonymity(tree: &PartitionTree, k: u32) -> Option<usize> {
    tree.leaves().iter().position(|b| !k_anonymous(b, k))
}

pub fn check_entropy_l_diversity(tree: &PartitionTree, l: f64) -> Option<usize> {
    tree.leaves().iter().position(|b| !l_diverse(b, l))
}

pub fn check_t_closeness(space: &Space, tree: &PartitionTree, t: f64) -> Option<usize> {
    let global = distribution(&space.global_sensitive());
    tree.leaves().iter().position(|b| !t_close(b, t, &global))
}

pub fn check_eps_privacy(tree: &PartitionTree, e: &EpsPrivacy) -> Option<usize> {
    tree.leaves().iter().position(|b| !eps_private(b, e))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dataset::{Attribute, Dataset, Dimension, Role, Schema};
    use crate::testutil::line_space;

    /// Salary on [0, 100] cut every 5, with a sensitive disease per tuple.
    fn salary_disease(rows: &[(f64, &str)]) -> Space {
        let schema = Schema::new(vec![
            Attribute::numeric("salary", Role::QuasiIdentifier, 0.0, 100.0),
            Attribute::nominal(
                "disease",
                Role::Sensitive,
                Some(vec!["flu".into(), "cold".into(), "hiv".into()]),
            ),
        ])
        .unwrap();
        let text: Vec<[String; 2]> = rows.iter().map(|(s, d)| [s.to_string(), d.to_string()]).collect();
        let ds = Dataset::from_string_rows(&schema, &text).unwrap();
        let cuts = (1..20).map(|i| i as f64 * 5.0).collect();
        let splits = SplitSet::new(vec![Dimension::numeric(0, "salary", 0.0, 100.0, cuts)]).unwrap();
        Space::new(Arc::new(ds), Arc::new(splits))
    }

    fn block(space: &Space, sensitive: &[u32]) -> Block {
        let mut b = space.root_block();
        b.sensitive = sensitive.into();
        b.count = sensitive.iter().sum();
        b
    }

    #[test]
    fn k_anonymity_reports_small_block() {
        let space = line_space(&[2, 1, 0]);
        let t = PartitionTree::new(&space).apply_split(&space, 0, 1).unwrap();
        assert_eq!(check_k_anonymity(&PartitionTree::new(&space), 3), None);
        assert_eq!(check_k_anonymity(&t, 2), Some(1));
        // Empty blocks are exempt.
        let t = t.apply_split(&space, 1, 2).unwrap();
        assert_eq!(check_k_anonymity(&t, 1), None);
    }

    #[test]
    fn entropy_examples() {
        let space = salary_disease(&[(10.0, "flu")]);
        assert!(l_diverse(&block(&space, &[1, 1, 0]), 2.0));
        assert!((entropy(&[3, 1]) - 0.5623351446188083).abs() < 1e-12);
        assert!(!l_diverse(&block(&space, &[3, 1, 0]), 2.0));
        assert!(!l_diverse(&block(&space, &[4, 0, 0]), 2.0));
        assert!(l_diverse(&block(&space, &[2, 2, 2]), 3.0));
    }

    #[test]
    fn emd_examples() {
        assert!((ordered_emd(&[0.5, 0.5], &[1.0, 0.0]) - 0.5).abs() < 1e-12);
        assert_eq!(ordered_emd(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]), 0.0);
        // Moving 1/3 of the mass two steps: (1/2) * (1/3 + 1/3).
        assert!((ordered_emd(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], &[2.0 / 3.0, 1.0 / 3.0, 0.0]) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn eps_privacy_conditions() {
        let space = salary_disease(&[(10.0, "flu")]);
        let e = EpsPrivacy {
            eps: 2.0,
            sigma: 10.0,
            b: 0.0,
            delta: 0.0,
            assume_monotone: false,
        };
        // R1 needs n >= 10; R2 caps any value at 1 - 1/1.8 of the block.
        assert!(!eps_private(&block(&space, &[3, 3, 3]), &e));
        assert!(eps_private(&block(&space, &[4, 3, 3]), &e));
        assert!(!eps_private(&block(&space, &[10, 0, 0]), &e));
        let loose = EpsPrivacy { eps: f64::INFINITY, ..e };
        assert!(eps_private(&block(&space, &[1, 0, 0]), &loose));
    }

    #[test]
    fn length_restriction_on_salary() {
        let rows: Vec<(f64, &str)> = (0..20).map(|i| (i as f64 * 5.0 + 2.5, "flu")).collect();
        let space = salary_disease(&rows);
        let cs = ConstraintSet {
            min_lengths: vec![("salary".into(), 10.0)],
            ..Default::default()
        };
        let c = Constraints::new(&space, &cs).unwrap();
        let root = PartitionTree::new(&space);
        assert_eq!(c.check_all(&space, &root), None);
        // Salary 5 (id 1) leaves a 5-wide block.
        let t = root.apply_split(&space, 0, 1).unwrap();
        assert_eq!(
            c.check_all(&space, &t),
            Some(Violation {
                constraint: ConstraintKind::MinLength,
                block: 0
            })
        );
        let t = root.apply_split(&space, 0, 2).unwrap();
        assert_eq!(c.check_all(&space, &t), None);
    }

    #[test]
    fn config_errors() {
        let space = line_space(&[1, 1]);
        let need = ConstraintSet {
            l: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(Constraints::new(&space, &need), Err(Error::MissingSensitiveAttribute)));
        let k0 = ConstraintSet {
            k: Some(0),
            ..Default::default()
        };
        assert!(Constraints::new(&space, &k0).is_err());
        let unknown = ConstraintSet {
            min_lengths: vec![("y".into(), 1.0)],
            ..Default::default()
        };
        assert!(Constraints::new(&space, &unknown).is_err());
    }

    #[test]
    fn non_monotone_constraints_do_not_prune_by_default() {
        let space = salary_disease(&[(2.0, "flu"), (7.0, "hiv"), (12.0, "flu"), (17.0, "hiv")]);
        let cs = ConstraintSet {
            k: Some(1),
            t: Some(TCloseness {
                t: 0.1,
                assume_monotone: false,
            }),
            ..Default::default()
        };
        let c = Constraints::new(&space, &cs).unwrap();
        let t = PartitionTree::new(&space).apply_split(&space, 0, 1).unwrap();
        assert_eq!(c.check_all(&space, &t).unwrap().constraint, ConstraintKind::TCloseness);
        assert_eq!(c.check_prunable(&space, &t), None);
    }
}
