//! Reconstruction of strategic decision-making circuits from event
//! participation time series.
//!
//! The pipeline: ingest fight-participation series ([`event_store`]),
//! measure directed strategic edges against a time-permutation null
//! ([`null_model`], [`strategy`]), assemble candidate circuit families
//! ([`circuit`]), simulate them as first-order Markov generators
//! ([`simulate`]), score simulated against observed fight-size
//! distributions ([`metrics`]), and compress the roster into sparse groups
//! to search a reduced strategy space ([`sparse`]).
//!
//! Every random choice derives from one master seed ([`seed`]); identical
//! configurations produce bitwise-identical outputs at any thread count.

pub mod bitset;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod event_store;
pub mod metrics;
pub mod null_model;
pub mod seed;
pub mod simulate;
pub mod sparse;
pub mod strategy;

pub use error::{Error, Result};
