//! Balanced cut and hierarchical clustering on semi-random graphs.
//!
//! The solver relaxes balanced cut to a vector program, keeps candidate
//! solutions as low-dimensional sketches `W` (with `X = WᵀW` never formed),
//! and drives them with sketched matrix multiplicative weights against a
//! stack of separation oracles: flatness/balance, flow-or-cut, and
//! heavy-vertex removal. [`balanced_cut::solve_balanced_cut`] is the entry
//! point; [`hierarchy::recursive_cluster`] builds hierarchical clusterings
//! on top of it. [`refcheck`] holds brute-force reference implementations.

pub mod balanced_cut;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod hierarchy;
pub mod instance;
pub mod io;
pub mod mmw;
pub mod oracles;
pub mod refcheck;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{cut_value, Graph, Partition};
