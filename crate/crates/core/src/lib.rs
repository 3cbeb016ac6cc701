//! Tournament-based routing over quantum-network-like random geometric graphs.
//!
//! The crate samples networks and link capacities, routes request windows
//! through biased tournament selection over edge-disjoint paths, and
//! evaluates the closed-form throughput model and its optimal bias.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod netgraph;
pub mod seeds;
pub mod simengine;
pub mod stats;
pub mod tournament;

pub use error::{Error, Result};
