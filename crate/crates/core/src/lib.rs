pub mod bounds;
pub mod constraints;
pub mod dataset;
pub mod enumeration;
pub mod error;
pub mod metrics;
pub mod partition;
pub mod search;
pub mod space;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
