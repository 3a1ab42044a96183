#![allow(dead_code)]

use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kdanon_core::constraints::{ConstraintSet, Constraints};
use kdanon_core::dataset::{
    Attribute, CellRange, Column, Dataset, Dimension, Role, Schema, SplitSet, Taxonomy, TaxonomyDoc,
};
use kdanon_core::enumeration::enumerate_categorical;
use kdanon_core::metrics::{block_cost, cost, MetricParams};
use kdanon_core::partition::PartitionTree;
use kdanon_core::search::SearchConfig;
use kdanon_core::space::{Block, Space};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tax(prefix: &str, text: &str) -> Arc<Taxonomy> {
    let text = text.replace('@', prefix);
    let doc: TaxonomyDoc = serde_json::from_str(&text).unwrap();
    Arc::new(Taxonomy::from_doc(&doc).unwrap())
}

/// Small taxonomies and the number of splits each contributes.
fn taxonomy_choice(prefix: &str, i: usize) -> (Arc<Taxonomy>, usize) {
    match i {
        0 => (tax(prefix, r#"{"label": "@any", "children": [{"label": "@a"}, {"label": "@b"}]}"#), 1),
        1 => (
            tax(prefix, r#"{"label": "@any", "children": [{"label": "@a"}, {"label": "@b"}, {"label": "@c"}]}"#),
            2,
        ),
        2 => (
            tax(
                prefix,
                r#"{"label": "@any", "children": [{"label": "@x", "children": [{"label": "@a"}, {"label": "@b"}]}, {"label": "@c"}]}"#,
            ),
            2,
        ),
        _ => (
            tax(
                prefix,
                r#"{"label": "@any", "children": [
                    {"label": "@x", "children": [{"label": "@a"}, {"label": "@b"}]},
                    {"label": "@y", "children": [{"label": "@c"}, {"label": "@d"}, {"label": "@e"}]}]}"#,
            ),
            4,
        ),
    }
}

pub struct InstanceShape {
    pub dims: std::ops::RangeInclusive<usize>,
    pub max_splits: usize,
    /// Split cap when three or more QI dimensions are drawn.
    pub max_splits_3d: usize,
    pub max_rows: usize,
    pub taxonomies: bool,
    /// Forces dimension 0 to be numeric (needed for length restrictions).
    pub numeric_first: bool,
}

/// Random space with numeric and taxonomy QIs, a class label and a sensitive
/// attribute. Numeric domains are [0, 10]; QI names are `q0`, `q1`, ...
pub fn random_space(seed: u64, shape: &InstanceShape) -> Space {
    let mut rng = rng(seed);
    let ndims = rng.gen_range(shape.dims.clone());
    let cap = if ndims >= 3 { shape.max_splits_3d } else { shape.max_splits };
    let mut budget = rng.gen_range(cap.min(2)..=cap);
    let mut attrs = Vec::new();
    let mut dims = Vec::new();
    let mut columns = Vec::new();
    let rows = rng.gen_range(1..=shape.max_rows);
    for d in 0..ndims {
        let name = format!("q{d}");
        let remaining_dims = ndims - d - 1;
        let share = if remaining_dims == 0 { budget } else { rng.gen_range(0..=budget) };
        let categorical = shape.taxonomies && !(d == 0 && shape.numeric_first) && rng.gen_bool(0.4);
        let (tx, used) = if categorical {
            let fits: Vec<usize> = (0..4).filter(|&i| taxonomy_choice("", i).1 <= share).collect();
            match fits.choose(&mut rng) {
                Some(&i) => {
                    let t = taxonomy_choice(&format!("{name}_"), i);
                    (Some(t.0), t.1)
                }
                None => (None, 0),
            }
        } else {
            (None, 0)
        };
        if let Some(t) = tx {
            budget -= used;
            let leaves = t.leaf_count();
            attrs.push(Attribute::taxonomy(&name, Role::QuasiIdentifier, t.clone()));
            dims.push(Dimension::categorical(d, &name, t, true));
            columns.push(Column::Categorical((0..rows).map(|_| rng.gen_range(0..leaves)).collect()));
        } else {
            let mut cuts: Vec<f64> = (1..10).map(f64::from).collect();
            cuts.shuffle(&mut rng);
            cuts.truncate(share);
            cuts.sort_by(f64::total_cmp);
            budget -= cuts.len();
            attrs.push(Attribute::numeric(&name, Role::QuasiIdentifier, 0.0, 10.0));
            dims.push(Dimension::numeric(d, &name, 0.0, 10.0, cuts));
            // Skewed values so that blocks differ in size.
            columns.push(Column::Numeric((0..rows).map(|_| 10.0 * rng.gen::<f64>().powi(2)).collect()));
        }
    }
    let classes = rng.gen_range(2..=3u32);
    let sensitive = rng.gen_range(2..=4u32);
    attrs.push(Attribute::nominal("class", Role::ClassLabel, Some(labels("c", classes))));
    columns.push(Column::Categorical((0..rows).map(|_| rng.gen_range(0..classes)).collect()));
    attrs.push(Attribute::nominal("disease", Role::Sensitive, Some(labels("s", sensitive))));
    columns.push(Column::Categorical((0..rows).map(|_| rng.gen_range(0..sensitive)).collect()));
    let ds = Dataset::from_columns(Schema::new(attrs).unwrap(), columns).unwrap();
    Space::new(Arc::new(ds), Arc::new(SplitSet::new(dims).unwrap()))
}

fn labels(prefix: &str, n: u32) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Purely numeric space over [0, 10] per axis.
pub fn numeric_space(cuts: &[Vec<f64>], points: &[Vec<f64>]) -> Space {
    scaled_numeric_space(cuts, points, 1.0)
}

/// [`numeric_space`] with every coordinate, cut and domain bound multiplied by `scale`.
pub fn scaled_numeric_space(cuts: &[Vec<f64>], points: &[Vec<f64>], scale: f64) -> Space {
    let hi = 10.0 * scale;
    let attrs = (0..cuts.len())
        .map(|d| Attribute::numeric(&format!("q{d}"), Role::QuasiIdentifier, 0.0, hi))
        .collect();
    let columns = (0..cuts.len())
        .map(|d| Column::Numeric(points.iter().map(|p| p[d] * scale).collect()))
        .collect();
    let ds = Dataset::from_columns(Schema::new(attrs).unwrap(), columns).unwrap();
    let dims = cuts
        .iter()
        .enumerate()
        .map(|(d, c)| Dimension::numeric(d, &format!("q{d}"), 0.0, hi, c.iter().map(|v| v * scale).collect()))
        .collect();
    Space::new(Arc::new(ds), Arc::new(SplitSet::new(dims).unwrap()))
}

/// The pieces a whole expansion unit (or a single numeric split) cuts a block into.
pub fn unit_pieces(space: &Space, block: &Block, starter: u32) -> Vec<Block> {
    let splits = space.splits();
    let mut rest = block.clone();
    let mut pieces = Vec::new();
    for id in splits.unit(starter) {
        let s = splits.get(id);
        let (l, r) = space.cut(&rest, s.dim, s.position);
        pieces.push(r);
        rest = l;
    }
    pieces.push(rest);
    pieces
}

/// Minimum cost over every hierarchical refinement of a box, by dynamic
/// programming over sub-boxes. Valid because all metrics are sums over
/// blocks and all constraints are checked block by block.
pub struct Optimum<'a> {
    space: &'a Space,
    params: MetricParams,
    constraints: Constraints,
    memo: HashMap<Box<[CellRange]>, Option<f64>>,
}

impl<'a> Optimum<'a> {
    pub fn new(space: &'a Space, cfg: &SearchConfig) -> Self {
        Optimum {
            space,
            params: cfg.metric_params(space),
            constraints: Constraints::new(space, &cfg.constraints).unwrap(),
            memo: HashMap::new(),
        }
    }

    pub fn block(&mut self, block: &Block) -> Option<f64> {
        if let Some(v) = self.memo.get(&block.extent) {
            return *v;
        }
        let splits = self.space.splits().clone();
        let mut best = if self.constraints.block_violation(&splits, block, false).is_none() {
            Some(block_cost(block, &self.params))
        } else {
            None
        };
        for s in splits.available(&block.extent) {
            if !splits.is_starter(s) {
                continue;
            }
            let mut total = Some(0.0);
            for piece in unit_pieces(self.space, block, s) {
                total = match (total, self.block(&piece)) {
                    (Some(t), Some(v)) => Some(t + v),
                    _ => None,
                };
            }
            if let Some(t) = total {
                best = Some(best.map_or(t, |b: f64| b.min(t)));
            }
        }
        self.memo.insert(block.extent.clone(), best);
        best
    }

    pub fn root(&mut self) -> Option<f64> {
        self.block(&self.space.root_block())
    }

    /// Cheapest feasible refinement that keeps the frozen leaves of `tree`
    /// and refines its eligible leaves freely.
    pub fn completion(&mut self, tree: &PartitionTree) -> Option<f64> {
        let eligible = tree.eligible_leaves();
        let splits = self.space.splits().clone();
        let mut total = 0.0;
        for (i, leaf) in tree.leaves().into_iter().enumerate() {
            if eligible.contains(&i) {
                total += self.block(leaf)?;
            } else {
                if self.constraints.block_violation(&splits, leaf, false).is_some() {
                    return None;
                }
                total += block_cost(leaf, &self.params);
            }
        }
        Some(total)
    }
}

/// Minimum feasible cost by visiting every node of the enumeration tree.
pub fn brute_force(space: &Space, cfg: &SearchConfig) -> Option<f64> {
    let params = cfg.metric_params(space);
    let c = Constraints::new(space, &cfg.constraints).unwrap();
    let mut best: Option<f64> = None;
    enumerate_categorical(space, |t| {
        if c.check_all(space, t).is_none() {
            let v = cost(space, t, &params).unwrap();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        ControlFlow::Continue(())
    })
    .unwrap();
    best
}

pub fn constraint_sets(kind: &str, space: &Space, rng: &mut ChaCha8Rng) -> ConstraintSet {
    match kind {
        "k" => ConstraintSet {
            k: Some(rng.gen_range(2..=(space.n().clamp(2, 12)))),
            ..Default::default()
        },
        "l" => ConstraintSet {
            l: Some(rng.gen_range(1.2..2.0)),
            ..Default::default()
        },
        "length" => ConstraintSet {
            min_lengths: vec![("q0".into(), rng.gen_range(1.0..4.0))],
            ..Default::default()
        },
        _ => unreachable!(),
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
