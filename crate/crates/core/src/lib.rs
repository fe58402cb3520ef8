//! Summary-tree reconstruction for diverging string sequences.
//!
//! Inputs are sequences of strings that grew at one end, split into branches,
//! and picked up copying noise along the way (chain-letter signature lists
//! are the motivating case). The crate reconstructs a labeled summary tree
//! that trades off per-sequence alignment cost against tree size via a node
//! cost parameter, and ships everything needed to study that trade-off:
//!
//! - [`bifurcation`]: optimal two-sequence trees via alignment with give-up.
//! - [`exact`]: exact solver for small corpora by topology enumeration.
//! - [`greedy`]: scalable heuristic that merges the best-overlapping pair.
//! - [`baseline`]: threshold/arborescence reconstruction for comparison.
//! - [`generator`]: seeded synthetic corpora with inherited noise.
//! - [`eval`]: scoring, tree edit distance, and node-cost selection.

pub mod baseline;
pub mod bifurcation;
pub mod cost;
pub mod error;
pub mod eval;
pub mod exact;
pub mod generator;
pub mod greedy;
pub mod metrics;
pub mod model;

pub use cost::{cost, format_cost, parse_cost, Cost};
pub use error::{DssspError, Result};
pub use model::{
    validate_tree, AlignOp, AlignmentTrace, CostModel, NodeId, SequenceSet, StringSequence,
    SummaryTree, SENTINEL_LABEL,
};
