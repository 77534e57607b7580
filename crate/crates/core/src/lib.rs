//! countdown: an in-memory columnar query engine whose optimizer measures
//! selection selectivities by running COUNT sub-queries during planning.
//!
//! The optimizer evaluates each candidate selection push-down by executing
//! the fused filter/project sub-plan with a COUNT gate: selections whose
//! true cardinality stays under the configured bound are materialized as
//! temporary tables and reused by the full query; everything else reverts.
//! Classic synopsis estimators (uniform heuristics, histograms, count-min
//! sketch, sampling) sit behind the same interface for head-to-head
//! comparison, and a benchmark harness reproduces the overhead, crossover,
//! and estimation-error experiments at desk scale.

pub mod bench;
pub mod catalog;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod executor;
pub mod optimizer;
pub mod plan;
pub mod sql;
pub mod storage;

pub use engine::{Engine, QueryOutput};
pub use error::{Error, Result};
