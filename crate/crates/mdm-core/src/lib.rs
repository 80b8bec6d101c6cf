//! Spammer detection over multi-relational interaction logs.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`ingest`] parses event logs into per-user relation sequences and can
//!    generate seeded synthetic corpora.
//! 2. [`embed`] learns relation embeddings and a recurrent position encoder
//!    from the raw sequences.
//! 3. [`model`] + [`train`] build the multi-level dependency model (long-term
//!    LSTM, windowed residual attention, union-level fusion) and fit it with a
//!    pairwise ranking loss.
//! 4. [`baselines`], [`features`] and [`classify`] turn users into feature
//!    rows (model features, 2-gram counts, per-relation graph statistics) and
//!    run the logistic-regression evaluation protocol.
//!
//! Everything is deterministic given explicit seeds; no global RNG state.

pub mod baselines;
pub mod checkpoint;
pub mod classify;
pub mod embed;
pub mod features;
pub mod ingest;
pub mod model;
pub mod numerics;
pub mod train;

/// Crate-wide error type. Domain misuse and malformed inputs are reported
/// here; programming errors (index bugs and the like) panic.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
