//! Echo-chamber analysis of interaction networks.
//!
//! Builds retweet, mention and follow networks from local files, classifies
//! users by ensemble bipartitioning of the retweet network, and measures
//! polarization (random walk controversy) and echo-chamber structure
//! (neighbor leanings, topology spectra, communities). Planted-partition
//! generators in [`synth`] provide ground truth for all of it.

pub mod controversy;
pub mod echo;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod partition;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{DirectedWeightedGraph, UserId};
