//! Streaming temporal-graph link prediction.
//!
//! The engine keeps an append-only interaction graph, maintains top-k
//! temporal personalized PageRank vectors under the event stream, and scores
//! candidate links three ways: a small MLP over each endpoint's most recent
//! neighbors, a training-free overlap of T-PPR vectors, and a recency-weighted
//! hybrid of the two.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dense;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod nc;
pub mod scaling;
pub mod scorers;
pub mod seeds;
pub mod tppr;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{Cutoff, Event, NodeId, SamplingStrategy, Seq, TemporalGraph};
