use std::sync::Arc;

use crate::dataset::{Attribute, Column, Dataset, Dimension, Role, Schema, SplitSet, Taxonomy, TaxonomyDoc};
use crate::space::Space;

pub struct Axis {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub cuts: Vec<f64>,
}

pub fn axis(name: &'static str, min: f64, max: f64, cuts: &[f64]) -> Axis {
    Axis {
        name,
        min,
        max,
        cuts: cuts.to_vec(),
    }
}

/// Numeric space with optional class labels ("a", "b", ...) per point.
pub fn numeric_space(axes: &[Axis], points: &[Vec<f64>], classes: Option<&[u32]>) -> Space {
    let mut attrs: Vec<Attribute> = axes
        .iter()
        .map(|a| Attribute::numeric(a.name, Role::QuasiIdentifier, a.min, a.max))
        .collect();
    let mut columns: Vec<Column> = (0..axes.len())
        .map(|d| Column::Numeric(points.iter().map(|p| p[d]).collect()))
        .collect();
    if let Some(c) = classes {
        let labels = (0..=c.iter().copied().max().unwrap_or(0))
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect();
        attrs.push(Attribute::nominal("class", Role::ClassLabel, Some(labels)));
        columns.push(Column::Categorical(c.to_vec()));
    }
    let ds = Dataset::from_columns(Schema::new(attrs).unwrap(), columns).unwrap();
    let dims = axes
        .iter()
        .enumerate()
        .map(|(i, a)| Dimension::numeric(i, a.name, a.min, a.max, a.cuts.clone()))
        .collect();
    Space::new(Arc::new(ds), Arc::new(SplitSet::new(dims).unwrap()))
}

/// One-dimensional space over cells 0..counts.len() with `counts[i]` points in cell i.
pub fn line_space(counts: &[usize]) -> Space {
    let cells = counts.len();
    let cuts: Vec<f64> = (1..cells).map(|i| i as f64).collect();
    let points: Vec<Vec<f64>> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(vec![i as f64 + 0.5], c))
        .collect();
    numeric_space(&[axis("x", 0.0, cells as f64, &cuts)], &points, None)
}

pub fn working_class() -> Arc<Taxonomy> {
    let text = r#"{"label": "Working-class", "children": [
        {"label": "Private"},
        {"label": "Government", "children": [{"label": "Fed"}, {"label": "State"}, {"label": "Local"}]},
        {"label": "Self-employed", "children": [{"label": "Self-emp-inc"}, {"label": "Self-emp-not-inc"}]},
        {"label": "Unemployed", "children": [{"label": "Without-pay"}, {"label": "Never-worked"}]}
    ]}"#;
    let doc: TaxonomyDoc = serde_json::from_str(text).unwrap();
    Arc::new(Taxonomy::from_doc(&doc).unwrap())
}

/// Working class (categorical) by salary in four intervals; one tuple per
/// (leaf, interval) pair.
pub fn working_class_salary() -> Space {
    let tax = working_class();
    let leaves = tax.leaf_count();
    let schema = Schema::new(vec![
        Attribute::taxonomy("workclass", Role::QuasiIdentifier, tax.clone()),
        Attribute::numeric("salary", Role::QuasiIdentifier, 0.0, 4.0),
    ])
    .unwrap();
    let mut wc = Vec::new();
    let mut sal = Vec::new();
    for leaf in 0..leaves {
        for i in 0..4 {
            wc.push(leaf);
            sal.push(i as f64 + 0.5);
        }
    }
    let ds = Dataset::from_columns(schema, vec![Column::Categorical(wc), Column::Numeric(sal)]).unwrap();
    let splits = SplitSet::new(vec![
        Dimension::categorical(0, "workclass", tax, true),
        Dimension::numeric(1, "salary", 0.0, 4.0, vec![1.0, 2.0, 3.0]),
    ])
    .unwrap();
    Space::new(Arc::new(ds), Arc::new(splits))
}
