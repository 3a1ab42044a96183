//! Tabular input, attribute schema, taxonomies and split generation.

mod data;
mod schema;
mod splits;
mod taxonomy;

pub use data::{Column, Dataset};
pub use schema::{Attribute, AttributeKind, Config, Domain, Role, Schema, SplitGenSpec, SplitStrategy};
pub use splits::{CellRange, Dimension, DimensionKind, Split, SplitId, SplitKind, SplitSet};
pub use taxonomy::{Taxonomy, TaxonomyDoc, TaxonomyNode};
