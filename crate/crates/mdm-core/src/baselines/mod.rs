//! Comparison feature families: interaction bigram counts and per-relation
//! graph statistics. Both are deliberately model-free; they set the bar the
//! learned features have to clear.

pub mod graph;
pub mod kgram;
