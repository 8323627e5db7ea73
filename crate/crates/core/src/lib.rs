//! Data-preparation engine: typed CSV ingestion, profiling, cleaning,
//! preprocessing, and replayable cleaning plans.

pub mod cleaner;
pub mod eda;
pub mod fixtures;
pub mod miner;
pub mod pipeline;
pub mod stats;
pub mod tabular;
pub mod transform;
