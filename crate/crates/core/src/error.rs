//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by ingestion, extraction, simulation, and metrics.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed line or row in an input file.
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    /// A fight with zero participants.
    #[error("empty event at line {line}")]
    EmptyEvent { line: usize },

    /// The same individual appeared twice in one event line.
    #[error("duplicate id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    /// An operation that needs at least one event got none.
    #[error("series has no events")]
    EmptySeries,

    /// Exhaustive null requested but T! exceeds the enumeration cap.
    #[error("exhaustive null over {n_events} events needs {n_orderings} orderings (cap {cap})")]
    ExhaustiveTooLarge {
        n_events: usize,
        n_orderings: u128,
        cap: u128,
    },

    /// A tuple references an individual not in the roster.
    #[error("unknown individual {id:?}")]
    UnknownIndividual { id: String },

    /// Eq-style edge is undefined because the source tuple never occurs.
    #[error("no observations of source tuple {tuple:?}")]
    NoObservations { tuple: Vec<String> },

    /// Null statistics were not computed for the requested key.
    #[error("null statistics missing for key {key:?}")]
    MissingNullKey { key: String },

    /// No variant of a circuit family kept any edge.
    #[error("no circuit variant kept at least one edge")]
    EmptyFamily,

    /// Simulation was asked to seed from observed data without any.
    #[error("empirical seeding requires an observed series")]
    MissingSeedSeries,

    /// Two series being compared are over different rosters.
    #[error("roster mismatch: {left} vs {right} individuals")]
    RosterMismatch { left: usize, right: usize },

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
