//! Timestamped partition trees and their legality rules.

mod export;
mod tree;

pub use export::{Extent, ExportedBlock, PartitionExport};
pub use tree::{Internal, Node, PartitionTree, Side, Signature};
