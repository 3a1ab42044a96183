use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nested `{label, children}` document form of a taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyDoc {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TaxonomyDoc>,
}

#[derive(Debug, Clone)]
pub struct TaxonomyNode {
    pub label: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: u32,
    /// Inclusive range of leaf positions covered by this node.
    pub leaves: (u32, u32),
}

impl TaxonomyNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// An ordered generalization hierarchy over the values of a categorical attribute.
///
/// Leaves are numbered left to right in depth-first order; every node covers a
/// contiguous run of leaves, which is what lets a categorical attribute behave
/// like an ordered axis during partitioning.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    nodes: Vec<TaxonomyNode>,
    leaf_nodes: Vec<usize>,
    by_label: HashMap<String, usize>,
    by_range: HashMap<(u32, u32), usize>,
}

impl Taxonomy {
    pub fn from_doc(doc: &TaxonomyDoc) -> Result<Self> {
        if doc.label.is_empty() && doc.children.is_empty() {
            return Err(Error::EmptyTaxonomy);
        }
        let mut tax = Taxonomy {
            nodes: Vec::new(),
            leaf_nodes: Vec::new(),
            by_label: HashMap::new(),
            by_range: HashMap::new(),
        };
        tax.insert(doc, None, 0)?;
        for (idx, node) in tax.nodes.iter().enumerate() {
            // A single-child chain shares its child's range; the outermost node wins.
            tax.by_range.entry(node.leaves).or_insert(idx);
        }
        Ok(tax)
    }

    fn insert(&mut self, doc: &TaxonomyDoc, parent: Option<usize>, depth: u32) -> Result<usize> {
        if self.by_label.contains_key(&doc.label) {
            return Err(Error::DuplicateLabel(doc.label.clone()));
        }
        let idx = self.nodes.len();
        self.by_label.insert(doc.label.clone(), idx);
        let first_leaf = self.leaf_nodes.len() as u32;
        self.nodes.push(TaxonomyNode {
            label: doc.label.clone(),
            parent,
            children: Vec::new(),
            depth,
            leaves: (first_leaf, first_leaf),
        });
        if doc.children.is_empty() {
            self.leaf_nodes.push(idx);
            return Ok(idx);
        }
        let mut children = Vec::with_capacity(doc.children.len());
        for child in &doc.children {
            children.push(self.insert(child, Some(idx), depth + 1)?);
        }
        let last_leaf = self.leaf_nodes.len() as u32 - 1;
        let node = &mut self.nodes[idx];
        node.children = children;
        node.leaves = (first_leaf, last_leaf);
        Ok(idx)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.is_null() || value.as_object().is_some_and(|o| o.is_empty()) {
            return Err(Error::EmptyTaxonomy);
        }
        let doc: TaxonomyDoc = serde_json::from_value(value)?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> TaxonomyDoc {
        fn build(tax: &Taxonomy, idx: usize) -> TaxonomyDoc {
            let node = &tax.nodes[idx];
            TaxonomyDoc {
                label: node.label.clone(),
                children: node.children.iter().map(|&c| build(tax, c)).collect(),
            }
        }
        build(self, 0)
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, idx: usize) -> &TaxonomyNode {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[TaxonomyNode] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> u32 {
        self.leaf_nodes.len() as u32
    }

    /// Position of the leaf carrying `label`, if it is a leaf.
    pub fn leaf_position(&self, label: &str) -> Option<u32> {
        let idx = *self.by_label.get(label)?;
        self.nodes[idx].is_leaf().then_some(self.nodes[idx].leaves.0)
    }

    pub fn leaf_label(&self, position: u32) -> &str {
        &self.nodes[self.leaf_nodes[position as usize]].label
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    /// The node covering exactly the inclusive leaf range `[lo, hi]`.
    pub fn node_for_range(&self, lo: u32, hi: u32) -> Option<usize> {
        self.by_range.get(&(lo, hi)).copied()
    }

    /// Internal nodes in breadth-first, left-to-right order.
    pub fn internal_nodes_bfs(&self) -> Vec<usize> {
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::from([self.root()]);
        while let Some(idx) = queue.pop_front() {
            if !self.nodes[idx].is_leaf() {
                order.push(idx);
                queue.extend(self.nodes[idx].children.iter().copied());
            }
        }
        order
    }

    pub fn check_no_single_child(&self) -> Result<()> {
        match self.nodes.iter().find(|n| n.children.len() == 1) {
            Some(n) => Err(Error::DegenerateTaxonomyNode(n.label.clone())),
            None => Ok(()),
        }
    }
}
