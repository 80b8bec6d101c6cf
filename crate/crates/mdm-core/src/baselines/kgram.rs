//! Bigram count features over a user's relation sequence.
//!
//! With `M` relation types the vector has `M * M` slots; the pair `(a, b)`
//! of adjacent interactions lands in slot `(a-1)*M + (b-1)`. A single-step
//! sequence has no bigrams and maps to the zero vector.

use crate::ingest::RelationId;
use crate::{Error, Result};

pub fn bigram_width(relation_count: usize) -> usize {
    relation_count * relation_count
}

/// Index of the `(first, second)` bigram.
pub fn bigram_index(first: RelationId, second: RelationId, relation_count: usize) -> usize {
    (first - 1) * relation_count + (second - 1)
}

pub fn bigram_features(seq: &[RelationId], relation_count: usize) -> Result<Vec<f64>> {
    if seq.is_empty() {
        return Err(Error::invalid("bigram features: empty sequence"));
    }
    let mut out = vec![0.0; bigram_width(relation_count)];
    for &id in seq {
        if id < 1 || id > relation_count {
            return Err(Error::invalid(format!(
                "bigram features: relation id {id} outside 1..={relation_count}"
            )));
        }
    }
    for pair in seq.windows(2) {
        out[bigram_index(pair[0], pair[1], relation_count)] += 1.0;
    }
    Ok(out)
}
