use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::SplitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: no rows")]
    NoRows { path: PathBuf },
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("line {line}, column `{column}`: missing value")]
    MissingValue { line: u64, column: String },
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column `{column}`: {value} outside domain [{min}, {max}]")]
    OutOfDomain {
        line: u64,
        column: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("line {line}, column `{column}`: `{value}` is not a leaf of the taxonomy")]
    UnknownCategory {
        line: u64,
        column: String,
        value: String,
    },

    #[error("taxonomy is empty")]
    EmptyTaxonomy,
    #[error("taxonomy label `{0}` appears more than once")]
    DuplicateLabel(String),
    #[error("taxonomy node `{0}` has a single child")]
    DegenerateTaxonomyNode(String),

    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("attribute `{0}` has no split specification")]
    MissingSplitSpec(String),
    #[error("attribute `{attribute}`: split value {value} is not strictly inside the domain")]
    SplitOutsideDomain { attribute: String, value: f64 },
    #[error("attribute `{attribute}`: split values must be strictly increasing (at {value})")]
    DuplicateSplit { attribute: String, value: f64 },
    #[error("attribute `{attribute}`: {reason}")]
    InvalidSplitSpec { attribute: String, reason: String },

    #[error("leaf {0} does not exist")]
    NoSuchLeaf(usize),
    #[error("no internal node at path {0}")]
    NoSuchNode(String),
    #[error("split {split} is not available at leaf {leaf}")]
    SplitNotAvailable { split: SplitId, leaf: usize },
    #[error("switch pattern not matched: {0}")]
    SwitchPattern(&'static str),
    #[error("malformed partition tree: {0}")]
    MalformedTree(String),

    #[error("split set contains taxonomy splits; use the categorical enumerator")]
    CategoricalSplits,
    #[error("oracle size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("the dataset has no class-label attribute")]
    MissingClassAttribute,
    #[error("the dataset has no sensitive attribute")]
    MissingSensitiveAttribute,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible instance: no partition satisfies the constraints")]
    Infeasible,
    #[error("invalid seed partition: {0}")]
    InvalidSeed(String),
}
