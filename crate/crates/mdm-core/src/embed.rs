//! User-relation representation learning.
//!
//! Each relation id owns a row in an input embedding table (row 0 is the
//! padding row and is pinned at zero). A single gated recurrent cell runs
//! over a user's embedded sequence and yields one position encoding `e_t`
//! per step. Training maximizes the log-likelihood of the observed relation
//! at every position under a softmax over relation embeddings, so relation
//! and position representations land in one shared space.
//!
//! The backward pass is written by hand and validated against central
//! differences in the tests.

use crate::ingest::{Corpus, RelationId};
use crate::numerics::{
    axpy, dot, outer_acc, sigmoid, softmax, vec_mat, vec_mat_t, AdamConfig, AdamState,
    Tensor2,
};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Uniform init half-width for every trainable tensor in the crate.
pub const INIT_SCALE: f64 = 0.1;

/// One recurrent gate: input weights, recurrent weights, bias.
#[derive(Clone, Debug, PartialEq)]
pub struct GateParams {
    pub w: Tensor2,
    pub u: Tensor2,
    pub b: Vec<f64>,
}

impl GateParams {
    pub fn zeros(d_in: usize, d: usize) -> Self {
        GateParams { w: Tensor2::zeros(d_in, d), u: Tensor2::zeros(d, d), b: vec![0.0; d] }
    }

    pub fn uniform(d_in: usize, d: usize, limit: f64, rng: &mut impl Rng) -> Self {
        GateParams {
            w: Tensor2::uniform(d_in, d, limit, rng),
            u: Tensor2::uniform(d, d, limit, rng),
            b: (0..d).map(|_| rng.gen_range(-limit..limit)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        GateParams::zeros(self.w.rows(), self.w.cols())
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.w"), self.w.data_mut());
        f(&format!("{prefix}.u"), self.u.data_mut());
        f(&format!("{prefix}.b"), &mut self.b);
    }
}

/// Gated recurrent cell: reset and update gates plus the candidate state.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub reset: GateParams,
    pub update: GateParams,
    pub candidate: GateParams,
}

impl GruParams {
    pub fn zeros(d: usize) -> Self {
        GruParams {
            reset: GateParams::zeros(d, d),
            update: GateParams::zeros(d, d),
            candidate: GateParams::zeros(d, d),
        }
    }

    pub fn uniform(d: usize, limit: f64, rng: &mut impl Rng) -> Self {
        GruParams {
            reset: GateParams::uniform(d, d, limit, rng),
            update: GateParams::uniform(d, d, limit, rng),
            candidate: GateParams::uniform(d, d, limit, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        GruParams::zeros(self.hidden_size())
    }

    pub fn hidden_size(&self) -> usize {
        self.reset.w.cols()
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.reset.visit_mut(&format!("{prefix}.reset"), f);
        self.update.visit_mut(&format!("{prefix}.update"), f);
        self.candidate.visit_mut(&format!("{prefix}.candidate"), f);
    }
}

/// Embedding table, encoder cell and relation embeddings; also doubles as
/// the gradient container for its own shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedParams {
    /// `(relation_count + 1) x d`; row 0 is the padding row, pinned at zero.
    pub input_embed: Tensor2,
    pub cell: GruParams,
    /// `relation_count x d`; row `r - 1` belongs to relation id `r`.
    pub rel_embed: Tensor2,
}

impl EmbedParams {
    pub fn init(relation_count: usize, d: usize, seed: u64) -> Result<Self> {
        if relation_count == 0 || d == 0 {
            return Err(Error::invalid("embed: relation_count and d must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut input_embed = Tensor2::uniform(relation_count + 1, d, INIT_SCALE, &mut rng);
        input_embed.row_mut(0).fill(0.0);
        Ok(EmbedParams {
            input_embed,
            cell: GruParams::uniform(d, INIT_SCALE, &mut rng),
            rel_embed: Tensor2::uniform(relation_count, d, INIT_SCALE, &mut rng),
        })
    }

    pub fn zeros_like(&self) -> Self {
        EmbedParams {
            input_embed: Tensor2::zeros(self.input_embed.rows(), self.input_embed.cols()),
            cell: self.cell.zeros_like(),
            rel_embed: Tensor2::zeros(self.rel_embed.rows(), self.rel_embed.cols()),
        }
    }

    pub fn relation_count(&self) -> usize {
        self.rel_embed.rows()
    }

    pub fn dim(&self) -> usize {
        self.rel_embed.cols()
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.input"), self.input_embed.data_mut());
        self.cell.visit_mut(&format!("{prefix}.cell"), f);
        f(&format!("{prefix}.rel"), self.rel_embed.data_mut());
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut clone = self.clone();
        clone.visit_mut("embed", &mut |_, data| out.extend_from_slice(data));
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let mut cursor = 0usize;
        let mut overflow = false;
        self.visit_mut("embed", &mut |_, data| {
            if cursor + data.len() <= flat.len() {
                data.copy_from_slice(&flat[cursor..cursor + data.len()]);
            } else {
                overflow = true;
            }
            cursor += data.len();
        });
        if overflow || cursor != flat.len() {
            return Err(Error::shape(format!(
                "flat buffer holds {} values, params need {}",
                flat.len(),
                cursor
            )));
        }
        Ok(())
    }

    pub fn frobenius_sq(&self) -> f64 {
        let mut total = 0.0;
        let mut clone = self.clone();
        clone.visit_mut("embed", &mut |_, data| {
            total += data.iter().map(|v| v * v).sum::<f64>();
        });
        total
    }
}

/// Everything the backward pass needs, recorded per step.
#[derive(Clone, Debug)]
pub struct GruCache {
    pub ids: Vec<RelationId>,
    pub x: Vec<Vec<f64>>,
    pub reset: Vec<Vec<f64>>,
    pub update: Vec<Vec<f64>>,
    pub cand: Vec<Vec<f64>>,
    /// `h_{t-1} * U_candidate`, needed for the reset-gate gradient.
    pub recur_cand: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

impl GruCache {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn hidden_before(&self, t: usize, d: usize) -> Vec<f64> {
        if t == 0 {
            vec![0.0; d]
        } else {
            self.hidden[t - 1].clone()
        }
    }
}

/// Run the encoder over a relation sequence. The initial hidden state is
/// zero; relation ids must lie in `1..=relation_count`.
pub fn gru_forward(seq: &[RelationId], params: &EmbedParams) -> Result<GruCache> {
    if seq.is_empty() {
        return Err(Error::invalid("encode: empty sequence"));
    }
    let m = params.relation_count();
    let d = params.dim();
    let mut cache = GruCache {
        ids: seq.to_vec(),
        x: Vec::with_capacity(seq.len()),
        reset: Vec::with_capacity(seq.len()),
        update: Vec::with_capacity(seq.len()),
        cand: Vec::with_capacity(seq.len()),
        recur_cand: Vec::with_capacity(seq.len()),
        hidden: Vec::with_capacity(seq.len()),
    };
    let mut h = vec![0.0; d];
    for &id in seq {
        if id < 1 || id > m {
            return Err(Error::invalid(format!("encode: relation id {id} outside 1..={m}")));
        }
        let x = params.input_embed.row(id).to_vec();

        let mut pre_r = vec_mat(&x, &params.cell.reset.w);
        axpy(&mut pre_r, &vec_mat(&h, &params.cell.reset.u), 1.0);
        axpy(&mut pre_r, &params.cell.reset.b, 1.0);
        let r: Vec<f64> = pre_r.iter().map(|&v| sigmoid(v)).collect();

        let mut pre_u = vec_mat(&x, &params.cell.update.w);
        axpy(&mut pre_u, &vec_mat(&h, &params.cell.update.u), 1.0);
        axpy(&mut pre_u, &params.cell.update.b, 1.0);
        let u: Vec<f64> = pre_u.iter().map(|&v| sigmoid(v)).collect();

        let rc = vec_mat(&h, &params.cell.candidate.u);
        let mut pre_n = vec_mat(&x, &params.cell.candidate.w);
        for i in 0..d {
            pre_n[i] += r[i] * rc[i] + params.cell.candidate.b[i];
        }
        let n: Vec<f64> = pre_n.iter().map(|&v| v.tanh()).collect();

        let mut h_next = vec![0.0; d];
        for i in 0..d {
            h_next[i] = (1.0 - u[i]) * n[i] + u[i] * h[i];
        }

        cache.x.push(x);
        cache.reset.push(r);
        cache.update.push(u);
        cache.cand.push(n);
        cache.recur_cand.push(rc);
        cache.hidden.push(h_next.clone());
        h = h_next;
    }
    Ok(cache)
}

/// Position encodings `e_t` for a sequence, one row per step.
pub fn encode_positions(seq: &[RelationId], params: &EmbedParams) -> Result<Vec<Vec<f64>>> {
    Ok(gru_forward(seq, params)?.hidden)
}

/// Backpropagate per-step hidden-state gradients through the cell,
/// accumulating into `grads` (input table and cell only).
pub fn gru_backward(
    cache: &GruCache,
    params: &EmbedParams,
    d_hidden: &[Vec<f64>],
    grads: &mut EmbedParams,
) {
    let d = params.dim();
    let steps = cache.len();
    assert_eq!(d_hidden.len(), steps, "one hidden gradient per step");

    let mut dh = vec![0.0; d];
    for t in (0..steps).rev() {
        axpy(&mut dh, &d_hidden[t], 1.0);

        let h_prev = cache.hidden_before(t, d);
        let r = &cache.reset[t];
        let u = &cache.update[t];
        let n = &cache.cand[t];
        let rc = &cache.recur_cand[t];
        let x = &cache.x[t];

        let mut dh_prev = vec![0.0; d];
        let mut du = vec![0.0; d];
        let mut dn = vec![0.0; d];
        for i in 0..d {
            du[i] = dh[i] * (h_prev[i] - n[i]);
            dn[i] = dh[i] * (1.0 - u[i]);
            dh_prev[i] = dh[i] * u[i];
        }

        // candidate state: n = tanh(x W + r .* (h_prev U) + b)
        let dpre_n: Vec<f64> = (0..d).map(|i| dn[i] * (1.0 - n[i] * n[i])).collect();
        outer_acc(&mut grads.cell.candidate.w, x, &dpre_n);
        axpy(&mut grads.cell.candidate.b, &dpre_n, 1.0);
        let dr: Vec<f64> = (0..d).map(|i| dpre_n[i] * rc[i]).collect();
        let drc: Vec<f64> = (0..d).map(|i| dpre_n[i] * r[i]).collect();
        outer_acc(&mut grads.cell.candidate.u, &h_prev, &drc);
        axpy(&mut dh_prev, &vec_mat_t(&drc, &params.cell.candidate.u), 1.0);
        let mut dx = vec_mat_t(&dpre_n, &params.cell.candidate.w);

        // update gate
        let dpre_u: Vec<f64> = (0..d).map(|i| du[i] * u[i] * (1.0 - u[i])).collect();
        outer_acc(&mut grads.cell.update.w, x, &dpre_u);
        outer_acc(&mut grads.cell.update.u, &h_prev, &dpre_u);
        axpy(&mut grads.cell.update.b, &dpre_u, 1.0);
        axpy(&mut dx, &vec_mat_t(&dpre_u, &params.cell.update.w), 1.0);
        axpy(&mut dh_prev, &vec_mat_t(&dpre_u, &params.cell.update.u), 1.0);

        // reset gate
        let dpre_r: Vec<f64> = (0..d).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();
        outer_acc(&mut grads.cell.reset.w, x, &dpre_r);
        outer_acc(&mut grads.cell.reset.u, &h_prev, &dpre_r);
        axpy(&mut grads.cell.reset.b, &dpre_r, 1.0);
        axpy(&mut dx, &vec_mat_t(&dpre_r, &params.cell.reset.w), 1.0);
        axpy(&mut dh_prev, &vec_mat_t(&dpre_r, &params.cell.reset.u), 1.0);

        axpy(grads.input_embed.row_mut(cache.ids[t]), &dx, 1.0);
        dh = dh_prev;
    }
}

/// Probability of each relation at one encoded position: softmax over
/// `rel_embed * e`.
pub fn relation_softmax(rel_embed: &Tensor2, position: &[f64]) -> Result<Vec<f64>> {
    if rel_embed.cols() != position.len() {
        return Err(Error::shape(format!(
            "relation_softmax: embeddings of width {} vs position of width {}",
            rel_embed.cols(),
            position.len()
        )));
    }
    let scores: Vec<f64> = (0..rel_embed.rows()).map(|r| dot(rel_embed.row(r), position)).collect();
    softmax(&scores)
}

/// Mean negative log-likelihood of the observed relations over the whole
/// corpus, plus gradient accumulation into `grads` when given.
fn corpus_nll_impl(
    params: &EmbedParams,
    corpus: &Corpus,
    mut grads: Option<&mut EmbedParams>,
) -> Result<f64> {
    let mut total = 0.0f64;
    let mut positions = 0usize;
    for seq in &corpus.sequences {
        positions += seq.relations.len();
    }
    if positions == 0 {
        return Err(Error::invalid("embed training: corpus has no sequences"));
    }
    let inv = 1.0 / positions as f64;
    for seq in &corpus.sequences {
        let cache = gru_forward(&seq.relations, params)?;
        let mut d_hidden: Vec<Vec<f64>> = Vec::new();
        if grads.is_some() {
            d_hidden = vec![vec![0.0; params.dim()]; cache.len()];
        }
        for (t, &id) in seq.relations.iter().enumerate() {
            let probs = relation_softmax(&params.rel_embed, &cache.hidden[t])?;
            total -= probs[id - 1].max(f64::MIN_POSITIVE).ln();
            if let Some(g) = grads.as_deref_mut() {
                // d(nll)/d(score_m) = p_m - [m == observed]
                for m in 0..params.relation_count() {
                    let mut coef = probs[m];
                    if m == id - 1 {
                        coef -= 1.0;
                    }
                    coef *= inv;
                    axpy(g.rel_embed.row_mut(m), &cache.hidden[t], coef);
                    axpy(&mut d_hidden[t], params.rel_embed.row(m), coef);
                }
            }
        }
        if let Some(g) = grads.as_deref_mut() {
            gru_backward(&cache, params, &d_hidden, g);
        }
    }
    Ok(total * inv)
}

pub fn corpus_nll(params: &EmbedParams, corpus: &Corpus) -> Result<f64> {
    corpus_nll_impl(params, corpus, None)
}

pub fn corpus_nll_with_grads(
    params: &EmbedParams,
    corpus: &Corpus,
    grads: &mut EmbedParams,
) -> Result<f64> {
    corpus_nll_impl(params, corpus, Some(grads))
}

/// Full-batch Adam over the representation objective. Returns the trained
/// parameters and the mean NLL recorded before each update.
pub fn train_embeddings(
    corpus: &Corpus,
    d: usize,
    epochs: usize,
    seed: u64,
) -> Result<(EmbedParams, Vec<f64>)> {
    let mut params = EmbedParams::init(corpus.relation_count, d, seed)?;
    if corpus.sequences.is_empty() {
        return Err(Error::invalid("embed training: corpus has no sequences"));
    }
    let adam = AdamConfig::default();
    let mut states: Vec<AdamState> = Vec::new();
    params.clone().visit_mut("embed", &mut |_, data| {
        states.push(AdamState::new(data.len(), adam));
    });

    let mut trace = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let mut grads = params.zeros_like();
        let nll = corpus_nll_with_grads(&params, corpus, &mut grads)?;
        trace.push(nll);
        let mut flat_grads: Vec<Vec<f64>> = Vec::new();
        grads.visit_mut("embed", &mut |_, data| flat_grads.push(data.to_vec()));
        let mut slot = 0usize;
        let mut failed = None;
        params.visit_mut("embed", &mut |_, data| {
            if let Err(e) = states[slot].update(data, &flat_grads[slot]) {
                failed = Some(e);
            }
            slot += 1;
        });
        if let Some(e) = failed {
            return Err(e);
        }
        // the padding row takes no gradient, so it stays exactly zero; make
        // that contract explicit
        debug_assert!(params.input_embed.row(0).iter().all(|&v| v == 0.0));
    }
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_sequences, Event, Label};
    use crate::numerics::finite_diff_check;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn tiny_corpus(seqs: &[&[RelationId]]) -> Corpus {
        let mut events = Vec::new();
        let mut labels = BTreeMap::new();
        for (u, seq) in seqs.iter().enumerate() {
            labels.insert(u as u64, Label::Normal);
            for (t, &rel) in seq.iter().enumerate() {
                events.push(Event {
                    timestamp: t as i64,
                    src: u as u64,
                    dst: ((u + 1) % seqs.len().max(2)) as u64,
                    relation: rel,
                });
            }
        }
        build_sequences(&events, &labels, 7).unwrap()
    }

    #[test]
    fn zero_cell_weights_give_zero_encodings() {
        let mut params = EmbedParams::init(7, 4, 3).unwrap();
        params.cell = GruParams::zeros(4);
        let states = encode_positions(&[1, 5, 3, 3], &params).unwrap();
        for h in states {
            assert!(h.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn nine_steps_give_nine_states() {
        let params = EmbedParams::init(7, 4, 3).unwrap();
        let seq = vec![5, 5, 5, 4, 4, 3, 5, 4, 4];
        let states = encode_positions(&seq, &params).unwrap();
        assert_eq!(states.len(), 9);
        assert!(states.iter().all(|h| h.len() == 4));
    }

    #[test]
    fn out_of_range_ids_error() {
        let params = EmbedParams::init(7, 4, 3).unwrap();
        assert!(encode_positions(&[0], &params).is_err());
        assert!(encode_positions(&[8], &params).is_err());
        assert!(encode_positions(&[], &params).is_err());
    }

    // d = 1 single step, recomputed with scalar formulas.
    #[test]
    fn single_cell_matches_scalar_trace() {
        let mut params = EmbedParams::init(2, 1, 0).unwrap();
        let (x, wr, ur, br) = (0.7, 0.3, -0.2, 0.1);
        let (wz, uz, bz) = (-0.4, 0.5, 0.2);
        let (wn, un, bn) = (0.6, -0.3, -0.1);
        params.input_embed.set(1, 0, x);
        params.cell.reset.w.set(0, 0, wr);
        params.cell.reset.u.set(0, 0, ur);
        params.cell.reset.b[0] = br;
        params.cell.update.w.set(0, 0, wz);
        params.cell.update.u.set(0, 0, uz);
        params.cell.update.b[0] = bz;
        params.cell.candidate.w.set(0, 0, wn);
        params.cell.candidate.u.set(0, 0, un);
        params.cell.candidate.b[0] = bn;

        // h0 = 0, so the recurrent terms drop out of the first step
        let u = sigmoid(wz * x + bz);
        let n = (wn * x + bn).tanh();
        let want = (1.0 - u) * n;

        let states = encode_positions(&[1], &params).unwrap();
        assert!((states[0][0] - want).abs() < 1e-12);
    }

    #[test]
    fn relation_softmax_uniform_for_identical_rows() {
        let rel = Tensor2::from_vec(7, 2, vec![0.3, -0.1].repeat(7)).unwrap();
        let p = relation_softmax(&rel, &[0.5, 0.2]).unwrap();
        for v in p {
            assert!((v - 1.0 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn relation_softmax_ln3_closed_form() {
        let rel = Tensor2::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        let p = relation_softmax(&rel, &[3.0f64.ln()]).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn repeated_relation_likelihood_increases_every_epoch() {
        let corpus = tiny_corpus(&[&[4, 4, 4]]);
        let (_, trace) = train_embeddings(&corpus, 4, 50, 11).unwrap();
        assert_eq!(trace.len(), 50);
        for w in trace.windows(2) {
            assert!(
                w[1] < w[0],
                "mean NLL failed to drop: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let corpus = tiny_corpus(&[&[4, 2, 4], &[5, 5, 5, 5], &[3, 2, 4, 1]]);
        let (a, trace_a) = train_embeddings(&corpus, 3, 10, 9).unwrap();
        let (b, trace_b) = train_embeddings(&corpus, 3, 10, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(trace_a, trace_b);
        let (c, _) = train_embeddings(&corpus, 3, 10, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_corpus_errors() {
        let corpus = build_sequences(&[], &BTreeMap::new(), 7).unwrap();
        assert!(train_embeddings(&corpus, 4, 5, 0).is_err());
    }

    #[test]
    fn padding_row_stays_exactly_zero() {
        let corpus = tiny_corpus(&[&[4, 2, 4], &[5, 5, 5, 5]]);
        let (params, _) = train_embeddings(&corpus, 4, 25, 5).unwrap();
        assert!(params.input_embed.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let corpus = tiny_corpus(&[&[4, 2, 4], &[5, 5, 5], &[3, 2, 4, 1, 6]]);
        let params = EmbedParams::init(7, 3, 21).unwrap();
        let mut grads = params.zeros_like();
        corpus_nll_with_grads(&params, &corpus, &mut grads).unwrap();

        let mut flat = params.flatten();
        let analytic = grads.flatten();
        let mut scratch = params.clone();
        let mut loss = |p: &[f64]| {
            scratch.assign_from_flat(p)?;
            corpus_nll(&scratch, &corpus)
        };
        let err = finite_diff_check(&mut loss, &mut flat, &analytic, 1e-5, None).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn flatten_roundtrip_preserves_params() {
        let params = EmbedParams::init(7, 3, 2).unwrap();
        let flat = params.flatten();
        let mut other = EmbedParams::init(7, 3, 99).unwrap();
        other.assign_from_flat(&flat).unwrap();
        assert_eq!(other, params);
        assert!(other.assign_from_flat(&flat[1..]).is_err());
    }

    proptest! {
        #[test]
        fn relation_probabilities_sum_to_one(
            pos in proptest::collection::vec(-3.0f64..3.0, 1..6),
            seed in 0u64..50,
        ) {
            let d = pos.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rel = Tensor2::uniform(7, d, 1.0, &mut rng);
            let p = relation_softmax(&rel, &pos).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }

        #[test]
        fn encodings_are_bounded_by_tanh_dynamics(
            seq in proptest::collection::vec(1usize..=7, 1..20),
            seed in 0u64..20,
        ) {
            let params = EmbedParams::init(7, 3, seed).unwrap();
            let states = encode_positions(&seq, &params).unwrap();
            // h is a convex blend of tanh outputs and earlier states
            for h in states {
                prop_assert!(h.iter().all(|v| v.abs() <= 1.0));
            }
        }
    }
}
