//! The multi-level dependency model.
//!
//! Per user: the pretrained encoder yields position encodings, an LSTM rolls
//! them into long-term states, a window over the most recent states feeds a
//! residual stack whose every level is summarized by shared row attention,
//! the per-level summaries are blended by order attention into an
//! individual-level context, and a second residual stack lifts that context
//! to a union-level view. The fused vector scores a user against the sum of
//! the relation embeddings they touched.
//!
//! [`Stage`] cuts the pipeline short for ablations; every stage keeps the
//! same scoring rule on whatever vector it produces.

mod attention;
mod lstm;

pub use attention::{
    order_attention, order_attention_backward, row_attention, row_attention_backward,
    AttentionParams, OrderAttnCache, RowAttnCache,
};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};

use crate::embed::{gru_backward, gru_forward, EmbedParams, GruCache, INIT_SCALE};
use crate::ingest::RelationId;
use crate::numerics::{axpy, dot, outer_acc, vec_mat_t, Tensor2};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Which prefix of the pipeline produces the user vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Mean of the position encodings; no trained ranking parameters.
    Representation,
    /// Last LSTM state.
    LongTerm,
    /// Individual-level attention context.
    Individual,
    /// Individual context fused with the union-level residual output.
    Full,
}

/// Whether the window over recent LSTM states starts at the current step or
/// one step back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowMode {
    /// Rows `z_T, z_{T-1}, ...` (default).
    IncludeCurrent,
    /// Rows `z_{T-1}, z_{T-2}, ...`; a length-1 sequence has nothing to
    /// attend over in this mode.
    LagOnly,
}

/// How repeated relations weigh into the relation-embedding sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationSum {
    /// Each distinct relation once (default).
    Distinct,
    /// Multiplicity-weighted.
    Bag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MdmConfig {
    pub stage: Stage,
    pub window_mode: WindowMode,
    pub relation_sum: RelationSum,
}

impl Default for MdmConfig {
    fn default() -> Self {
        MdmConfig {
            stage: Stage::Full,
            window_mode: WindowMode::IncludeCurrent,
            relation_sum: RelationSum::Distinct,
        }
    }
}

/// Model sizes: embedding width `d`, window length `n`, and the two residual
/// depths `k` (individual) and `L` (union).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MdmHyper {
    pub relation_count: usize,
    pub d: usize,
    pub window_len: usize,
    pub individual_layers: usize,
    pub union_layers: usize,
}

impl MdmHyper {
    pub fn validate(&self) -> Result<()> {
        if self.relation_count == 0 || self.d == 0 || self.window_len == 0 {
            return Err(Error::invalid(
                "model: relation_count, d and window_len must all be positive",
            ));
        }
        Ok(())
    }
}

/// One residual layer: `out = relu(x W + b + x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualLayer {
    pub w: Tensor2,
    pub b: Vec<f64>,
}

impl ResidualLayer {
    pub fn zeros(d: usize) -> Self {
        ResidualLayer { w: Tensor2::zeros(d, d), b: vec![0.0; d] }
    }

    pub fn uniform(d: usize, limit: f64, rng: &mut impl Rng) -> Self {
        ResidualLayer {
            w: Tensor2::uniform(d, d, limit, rng),
            b: (0..d).map(|_| rng.gen_range(-limit..limit)).collect(),
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.w"), self.w.data_mut());
        f(&format!("{prefix}.b"), &mut self.b);
    }
}

/// All trainable tensors; also serves as its own gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct MdmParams {
    pub hyper: MdmHyper,
    pub embed: EmbedParams,
    pub lstm: LstmParams,
    pub individual: Vec<ResidualLayer>,
    pub attention: AttentionParams,
    pub union: Vec<ResidualLayer>,
}

impl MdmParams {
    pub fn init(hyper: MdmHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = hyper.d;
        let mut input_embed =
            Tensor2::uniform(hyper.relation_count + 1, d, INIT_SCALE, &mut rng);
        input_embed.row_mut(0).fill(0.0);
        let embed = EmbedParams {
            input_embed,
            cell: crate::embed::GruParams::uniform(d, INIT_SCALE, &mut rng),
            rel_embed: Tensor2::uniform(hyper.relation_count, d, INIT_SCALE, &mut rng),
        };
        Ok(MdmParams {
            hyper,
            embed,
            lstm: LstmParams::uniform(d, INIT_SCALE, &mut rng),
            individual: (0..hyper.individual_layers)
                .map(|_| ResidualLayer::uniform(d, INIT_SCALE, &mut rng))
                .collect(),
            attention: AttentionParams::uniform(d, INIT_SCALE, &mut rng),
            union: (0..hyper.union_layers)
                .map(|_| ResidualLayer::uniform(d, INIT_SCALE, &mut rng))
                .collect(),
        })
    }

    pub fn zeros_like(&self) -> Self {
        MdmParams {
            hyper: self.hyper,
            embed: self.embed.zeros_like(),
            lstm: self.lstm.zeros_like(),
            individual: self.individual.iter().map(|l| ResidualLayer::zeros(l.w.cols())).collect(),
            attention: self.attention.zeros_like(),
            union: self.union.iter().map(|l| ResidualLayer::zeros(l.w.cols())).collect(),
        }
    }

    /// Visit every tensor in a fixed order with a stable name. This order is
    /// the canonical one for flattening, checkpoints and optimizer state.
    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.embed.visit_mut("embed", f);
        self.lstm.visit_mut("lstm", f);
        for (i, layer) in self.individual.iter_mut().enumerate() {
            layer.visit_mut(&format!("ind{i}"), f);
        }
        self.attention.visit_mut("attn", f);
        for (i, layer) in self.union.iter_mut().enumerate() {
            layer.visit_mut(&format!("union{i}"), f);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.clone().visit_mut(&mut |_, data| out.extend_from_slice(data));
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let mut cursor = 0usize;
        let mut overflow = false;
        self.visit_mut(&mut |_, data| {
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

    /// `self += factor * other` over every tensor.
    pub fn add_scaled_params(&mut self, other: &MdmParams, factor: f64) {
        let flat = other.flatten();
        let mut cursor = 0usize;
        self.visit_mut(&mut |_, data| {
            axpy(data, &flat[cursor..cursor + data.len()], factor);
            cursor += data.len();
        });
    }

    pub fn scale_all(&mut self, factor: f64) {
        self.visit_mut(&mut |_, data| {
            for v in data.iter_mut() {
                *v *= factor;
            }
        });
    }

    pub fn frobenius_sq(&self) -> f64 {
        let mut total = 0.0;
        self.clone().visit_mut(&mut |_, data| {
            total += data.iter().map(|v| v * v).sum::<f64>();
        });
        total
    }
}

/// Window over the most recent LSTM states, newest first, zero-padded with a
/// mask when the sequence is shorter than the window.
#[derive(Clone, Debug)]
pub struct WindowCache {
    pub rows: Tensor2,
    pub mask: Vec<bool>,
    /// For each row, the 0-based hidden-state index it came from.
    pub source: Vec<Option<usize>>,
}

pub fn recent_window(
    hidden: &[Vec<f64>],
    window_len: usize,
    mode: WindowMode,
) -> Result<WindowCache> {
    if window_len == 0 {
        return Err(Error::invalid("recent_window: window length must be positive"));
    }
    if hidden.is_empty() {
        return Err(Error::invalid("recent_window: no hidden states"));
    }
    let d = hidden[0].len();
    let steps = hidden.len();
    let newest: isize = match mode {
        WindowMode::IncludeCurrent => steps as isize - 1,
        WindowMode::LagOnly => steps as isize - 2,
    };
    let mut rows = Tensor2::zeros(window_len, d);
    let mut mask = vec![false; window_len];
    let mut source = vec![None; window_len];
    for j in 0..window_len {
        let idx = newest - j as isize;
        if idx >= 0 {
            let t = idx as usize;
            rows.row_mut(j).copy_from_slice(&hidden[t]);
            mask[j] = true;
            source[j] = Some(t);
        }
    }
    Ok(WindowCache { rows, mask, source })
}

/// Residual stack over window rows; keeps every level for the attention
/// reads plus the pre-activations for backward.
#[derive(Clone, Debug)]
pub struct RowStackCache {
    pub stack: Vec<Tensor2>,
    pre: Vec<Tensor2>,
}

pub fn individual_forward(rows: &Tensor2, layers: &[ResidualLayer]) -> Result<RowStackCache> {
    let mut stack = Vec::with_capacity(layers.len() + 1);
    let mut pre = Vec::with_capacity(layers.len());
    stack.push(rows.clone());
    for layer in layers {
        let prev = stack.last().unwrap();
        let mut p = prev.matmul(&layer.w)?;
        for r in 0..p.rows() {
            let row = p.row_mut(r);
            axpy(row, &layer.b, 1.0);
        }
        p.add_scaled(prev, 1.0)?;
        let mut out = p.clone();
        for v in out.data_mut() {
            if *v <= 0.0 {
                *v = 0.0;
            }
        }
        pre.push(p);
        stack.push(out);
    }
    Ok(RowStackCache { stack, pre })
}

/// Backward through the row stack. `d_stack[l]` holds the gradient flowing
/// into level `l` (from the attention reads); returns the gradient on the
/// window rows.
pub fn individual_backward(
    cache: &RowStackCache,
    layers: &[ResidualLayer],
    mut d_stack: Vec<Tensor2>,
    grads: &mut [ResidualLayer],
) -> Result<Tensor2> {
    assert_eq!(d_stack.len(), layers.len() + 1);
    for l in (1..=layers.len()).rev() {
        let mut dp = d_stack[l].clone();
        let pre = &cache.pre[l - 1];
        for (v, p) in dp.data_mut().iter_mut().zip(pre.data()) {
            if *p <= 0.0 {
                *v = 0.0;
            }
        }
        let below = &cache.stack[l - 1];
        grads[l - 1].w.add_scaled(&below.transpose().matmul(&dp)?, 1.0)?;
        for r in 0..dp.rows() {
            axpy(&mut grads[l - 1].b, dp.row(r), 1.0);
        }
        let mut carry = dp.matmul(&layers[l - 1].w.transpose())?;
        carry.add_scaled(&dp, 1.0)?;
        d_stack[l - 1].add_scaled(&carry, 1.0)?;
    }
    Ok(d_stack.swap_remove(0))
}

/// Residual stack over the context vector.
#[derive(Clone, Debug)]
pub struct UnionCache {
    pub stack: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

pub fn union_forward(context: &[f64], layers: &[ResidualLayer]) -> UnionCache {
    let mut stack = Vec::with_capacity(layers.len() + 1);
    let mut pre = Vec::with_capacity(layers.len());
    stack.push(context.to_vec());
    for layer in layers {
        let prev = stack.last().unwrap();
        let mut p = crate::numerics::vec_mat(prev, &layer.w);
        axpy(&mut p, &layer.b, 1.0);
        axpy(&mut p, prev, 1.0);
        let out: Vec<f64> = p.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        pre.push(p);
        stack.push(out);
    }
    UnionCache { stack, pre }
}

pub fn union_backward(
    cache: &UnionCache,
    layers: &[ResidualLayer],
    d_out: &[f64],
    grads: &mut [ResidualLayer],
) -> Vec<f64> {
    let mut d = d_out.to_vec();
    for l in (1..=layers.len()).rev() {
        let mut dp = d.clone();
        for (v, p) in dp.iter_mut().zip(&cache.pre[l - 1]) {
            if *p <= 0.0 {
                *v = 0.0;
            }
        }
        outer_acc(&mut grads[l - 1].w, &cache.stack[l - 1], &dp);
        axpy(&mut grads[l - 1].b, &dp, 1.0);
        let mut carry = vec_mat_t(&dp, &layers[l - 1].w);
        axpy(&mut carry, &dp, 1.0);
        d = carry;
    }
    d
}

/// Element-wise fusion of the individual and union views.
pub fn fuse(context: &[f64], union_out: &[f64]) -> Result<Vec<f64>> {
    if context.len() != union_out.len() {
        return Err(Error::shape(format!(
            "fuse: widths {} vs {}",
            context.len(),
            union_out.len()
        )));
    }
    Ok(context.iter().zip(union_out).map(|(a, b)| a + b).collect())
}

/// Sum of the relation embeddings a user touched, plus the per-row weights
/// used (for backward).
pub fn relation_mix(
    seq: &[RelationId],
    rel_embed: &Tensor2,
    mode: RelationSum,
) -> Result<(Vec<f64>, Vec<(usize, f64)>)> {
    if seq.is_empty() {
        return Err(Error::invalid("relation_mix: empty sequence"));
    }
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &id in seq {
        if id < 1 || id > rel_embed.rows() {
            return Err(Error::invalid(format!(
                "relation_mix: relation id {id} outside 1..={}",
                rel_embed.rows()
            )));
        }
        *counts.entry(id - 1).or_insert(0.0) += 1.0;
    }
    let weights: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(row, count)| match mode {
            RelationSum::Distinct => (row, 1.0),
            RelationSum::Bag => (row, count),
        })
        .collect();
    let mut mix = vec![0.0; rel_embed.cols()];
    for &(row, w) in &weights {
        axpy(&mut mix, rel_embed.row(row), w);
    }
    Ok((mix, weights))
}

/// Every intermediate value of one user's forward pass. Stage-specific
/// fields are `None` when that part of the pipeline did not run.
#[derive(Clone, Debug)]
pub struct UserForward {
    pub seq: Vec<RelationId>,
    pub gru: GruCache,
    pub lstm: Option<LstmCache>,
    pub window: Option<WindowCache>,
    pub individual: Option<RowStackCache>,
    pub row_attn: Vec<RowAttnCache>,
    pub context_stack: Vec<Vec<f64>>,
    pub order_attn: Option<OrderAttnCache>,
    pub union: Option<UnionCache>,
    /// The user vector `F(u, n)` of the configured stage.
    pub fused: Vec<f64>,
    pub rel_mix: Vec<f64>,
    pub rel_weights: Vec<(usize, f64)>,
    pub score: f64,
}

/// Run the pipeline for one user at the configured stage.
pub fn user_forward(
    seq: &[RelationId],
    params: &MdmParams,
    cfg: &MdmConfig,
) -> Result<UserForward> {
    params.hyper.validate()?;
    let gru = gru_forward(seq, &params.embed)?;
    let (rel_mix, rel_weights) =
        relation_mix(seq, &params.embed.rel_embed, cfg.relation_sum)?;

    let mut fwd = UserForward {
        seq: seq.to_vec(),
        gru,
        lstm: None,
        window: None,
        individual: None,
        row_attn: Vec::new(),
        context_stack: Vec::new(),
        order_attn: None,
        union: None,
        fused: Vec::new(),
        rel_mix,
        rel_weights,
        score: 0.0,
    };

    if cfg.stage == Stage::Representation {
        let d = params.hyper.d;
        let mut mean = vec![0.0; d];
        for h in &fwd.gru.hidden {
            axpy(&mut mean, h, 1.0);
        }
        let inv = 1.0 / fwd.gru.hidden.len() as f64;
        for v in &mut mean {
            *v *= inv;
        }
        fwd.fused = mean;
        fwd.score = dot(&fwd.fused, &fwd.rel_mix);
        return Ok(fwd);
    }

    let lstm = lstm_forward(&fwd.gru.hidden, &params.lstm)?;
    if cfg.stage == Stage::LongTerm {
        fwd.fused = lstm.hidden.last().unwrap().clone();
        fwd.lstm = Some(lstm);
        fwd.score = dot(&fwd.fused, &fwd.rel_mix);
        return Ok(fwd);
    }

    let window = recent_window(&lstm.hidden, params.hyper.window_len, cfg.window_mode)?;
    let individual = individual_forward(&window.rows, &params.individual)?;
    let mut context_stack = Vec::with_capacity(individual.stack.len());
    let mut row_attn = Vec::with_capacity(individual.stack.len());
    for level in &individual.stack {
        let (v, cache) = row_attention(level, &window.mask, &params.attention)?;
        context_stack.push(v);
        row_attn.push(cache);
    }
    let (context, order_cache) = order_attention(&context_stack, &params.attention)?;

    fwd.lstm = Some(lstm);
    fwd.window = Some(window);
    fwd.individual = Some(individual);
    fwd.row_attn = row_attn;
    fwd.context_stack = context_stack;
    fwd.order_attn = Some(order_cache);

    if cfg.stage == Stage::Individual {
        fwd.fused = context;
        fwd.score = dot(&fwd.fused, &fwd.rel_mix);
        return Ok(fwd);
    }

    let union = union_forward(&context, &params.union);
    fwd.fused = fuse(&context, union.stack.last().unwrap())?;
    fwd.union = Some(union);
    // context is recoverable from the stack; not stored twice
    fwd.score = dot(&fwd.fused, &fwd.rel_mix);
    Ok(fwd)
}

/// Backward for [`user_forward`]: pushes `d_score` through every level that
/// ran, accumulating into `grads`.
pub fn user_backward(
    fwd: &UserForward,
    params: &MdmParams,
    cfg: &MdmConfig,
    d_score: f64,
    grads: &mut MdmParams,
) -> Result<()> {
    let d = params.hyper.d;
    // score = fused . rel_mix
    let d_fused: Vec<f64> = fwd.rel_mix.iter().map(|&v| v * d_score).collect();
    for &(row, w) in &fwd.rel_weights {
        axpy(grads.embed.rel_embed.row_mut(row), &fwd.fused, w * d_score);
    }

    let steps = fwd.gru.len();
    match cfg.stage {
        Stage::Representation => {
            let inv = 1.0 / steps as f64;
            let per_step: Vec<f64> = d_fused.iter().map(|&v| v * inv).collect();
            let d_hidden = vec![per_step; steps];
            gru_backward(&fwd.gru, &params.embed, &d_hidden, &mut grads.embed);
            return Ok(());
        }
        Stage::LongTerm => {
            let lstm = fwd.lstm.as_ref().expect("long-term stage keeps the lstm cache");
            let mut d_hidden = vec![vec![0.0; d]; steps];
            d_hidden[steps - 1] = d_fused;
            let d_inputs = lstm_backward(lstm, &params.lstm, &d_hidden, &mut grads.lstm);
            gru_backward(&fwd.gru, &params.embed, &d_inputs, &mut grads.embed);
            return Ok(());
        }
        Stage::Individual | Stage::Full => {}
    }

    let lstm = fwd.lstm.as_ref().expect("cache kept");
    let window = fwd.window.as_ref().expect("cache kept");
    let individual = fwd.individual.as_ref().expect("cache kept");
    let order_cache = fwd.order_attn.as_ref().expect("cache kept");

    // gradient on the individual context v
    let d_context = match cfg.stage {
        Stage::Full => {
            let union = fwd.union.as_ref().expect("cache kept");
            // fused = v + union(v): both paths carry d_fused
            let mut dv =
                union_backward(union, &params.union, &d_fused, &mut grads.union);
            axpy(&mut dv, &d_fused, 1.0);
            dv
        }
        _ => d_fused,
    };

    let mut d_stack_vecs = vec![vec![0.0; d]; fwd.context_stack.len()];
    order_attention_backward(
        &fwd.context_stack,
        &params.attention,
        order_cache,
        &d_context,
        &mut grads.attention,
        &mut d_stack_vecs,
    );

    let mut d_levels: Vec<Tensor2> = individual
        .stack
        .iter()
        .map(|t| Tensor2::zeros(t.rows(), t.cols()))
        .collect();
    for (l, level) in individual.stack.iter().enumerate() {
        row_attention_backward(
            level,
            &window.mask,
            &params.attention,
            &fwd.row_attn[l],
            &d_stack_vecs[l],
            &mut grads.attention,
            &mut d_levels[l],
        );
    }

    let d_rows =
        individual_backward(individual, &params.individual, d_levels, &mut grads.individual)?;

    let mut d_hidden = vec![vec![0.0; d]; steps];
    for (j, src) in window.source.iter().enumerate() {
        if let Some(t) = *src {
            axpy(&mut d_hidden[t], d_rows.row(j), 1.0);
        }
    }
    let d_inputs = lstm_backward(lstm, &params.lstm, &d_hidden, &mut grads.lstm);
    gru_backward(&fwd.gru, &params.embed, &d_inputs, &mut grads.embed);
    Ok(())
}

/// Spam-affinity score of one user.
pub fn score(seq: &[RelationId], params: &MdmParams, cfg: &MdmConfig) -> Result<f64> {
    Ok(user_forward(seq, params, cfg)?.score)
}

/// Granularity of the score-decomposition block in the feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureMode {
    /// Contributions collapsed over relations: `[head..., fused .* mix]`.
    /// The appended block sums to the user's score.
    Sum,
    /// One block per relation: `[head..., w_1 (fused .* m_1), ...,
    /// w_M (fused .* m_M)]` with `w_r = 0` for relations the user never
    /// touched. The blocks sum to the `Sum` block.
    ConcatAll,
}

/// Classifier features for one forward pass: the representation head
/// followed by the user's score decomposition. The head depends on the
/// stage — the full model contributes both the individual context and the
/// union output, earlier stages contribute their single vector. The
/// decomposition splits `score = fused . mix` into per-coordinate (and, in
/// [`FeatureMode::ConcatAll`], per-relation) summands, so a linear
/// classifier over the features can express the trained ranking score
/// itself.
pub fn extract_features(fwd: &UserForward, params: &MdmParams, mode: FeatureMode) -> Vec<f64> {
    let mut out = Vec::new();
    match (&fwd.union, fwd.context_stack.is_empty()) {
        (Some(union), _) => {
            // full stage: v and g_L separately, not their sum
            out.extend_from_slice(&union.stack[0]);
            out.extend_from_slice(union.stack.last().unwrap());
        }
        _ => out.extend_from_slice(&fwd.fused),
    }
    match mode {
        FeatureMode::Sum => {
            out.extend(fwd.fused.iter().zip(&fwd.rel_mix).map(|(f, m)| f * m));
        }
        FeatureMode::ConcatAll => {
            let m = params.embed.rel_embed.rows();
            let mut weights = vec![0.0; m];
            for &(row, w) in &fwd.rel_weights {
                weights[row] += w;
            }
            for (r, w) in weights.into_iter().enumerate() {
                let row = params.embed.rel_embed.row(r);
                out.extend(fwd.fused.iter().zip(row).map(|(f, e)| w * f * e));
            }
        }
    }
    out
}

/// Feature width for a stage and mode at the given sizes.
pub fn feature_width(stage: Stage, mode: FeatureMode, d: usize, relation_count: usize) -> usize {
    let head = match stage {
        Stage::Full => 2 * d,
        _ => d,
    };
    head + match mode {
        FeatureMode::Sum => d,
        FeatureMode::ConcatAll => relation_count * d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_check;

    fn hyper(d: usize, n: usize, k: usize, l: usize) -> MdmHyper {
        MdmHyper {
            relation_count: 7,
            d,
            window_len: n,
            individual_layers: k,
            union_layers: l,
        }
    }

    #[test]
    fn window_of_nine_state_run_takes_last_three() {
        let hidden: Vec<Vec<f64>> = (1..=9).map(|t| vec![t as f64, -(t as f64)]).collect();
        let w = recent_window(&hidden, 3, WindowMode::IncludeCurrent).unwrap();
        assert_eq!(w.rows.row(0), &[9.0, -9.0]);
        assert_eq!(w.rows.row(1), &[8.0, -8.0]);
        assert_eq!(w.rows.row(2), &[7.0, -7.0]);
        assert_eq!(w.mask, vec![true; 3]);
        assert_eq!(w.source, vec![Some(8), Some(7), Some(6)]);
    }

    #[test]
    fn lag_only_window_skips_the_current_state() {
        let hidden: Vec<Vec<f64>> = (1..=9).map(|t| vec![t as f64]).collect();
        let w = recent_window(&hidden, 3, WindowMode::LagOnly).unwrap();
        assert_eq!(w.rows.row(0), &[8.0]);
        assert_eq!(w.rows.row(2), &[6.0]);
    }

    #[test]
    fn short_sequence_pads_and_masks() {
        let hidden = vec![vec![1.0], vec![2.0]];
        let w = recent_window(&hidden, 4, WindowMode::IncludeCurrent).unwrap();
        assert_eq!(w.mask, vec![true, true, false, false]);
        assert_eq!(w.rows.row(0), &[2.0]);
        assert_eq!(w.rows.row(1), &[1.0]);
        assert_eq!(w.rows.row(2), &[0.0]);
        // attention over the padded window puts all mass on the real rows
        let p = AttentionParams::zeros(1);
        let (_, cache) = row_attention(&w.rows, &w.mask, &p).unwrap();
        assert!((cache.weights[0] + cache.weights[1] - 1.0).abs() < 1e-12);
        assert_eq!(cache.weights[2], 0.0);
    }

    #[test]
    fn window_length_one_takes_only_newest() {
        let hidden = vec![vec![1.0], vec![2.0], vec![3.0]];
        let w = recent_window(&hidden, 1, WindowMode::IncludeCurrent).unwrap();
        assert_eq!(w.rows.row(0), &[3.0]);
        assert_eq!(w.mask, vec![true]);
    }

    #[test]
    fn zero_weight_residual_layers_collapse_to_relu() {
        let rows =
            Tensor2::from_vec(2, 3, vec![0.5, -0.5, 1.0, -1.0, 0.25, -0.25]).unwrap();
        let layers = vec![ResidualLayer::zeros(3), ResidualLayer::zeros(3)];
        let cache = individual_forward(&rows, &layers).unwrap();
        let relu_once: Vec<f64> =
            rows.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        assert_eq!(cache.stack[1].data(), &relu_once[..]);
        assert_eq!(cache.stack[2].data(), &relu_once[..]);
    }

    #[test]
    fn empty_residual_stack_is_identity() {
        let rows = Tensor2::from_vec(2, 2, vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        let cache = individual_forward(&rows, &[]).unwrap();
        assert_eq!(cache.stack.len(), 1);
        assert_eq!(&cache.stack[0], &rows);
    }

    #[test]
    fn union_zero_weights_apply_relu_once() {
        let layers = vec![ResidualLayer::zeros(3), ResidualLayer::zeros(3)];
        let cache = union_forward(&[0.5, -0.5, 2.0], &layers);
        assert_eq!(cache.stack.last().unwrap(), &vec![0.5, 0.0, 2.0]);
    }

    #[test]
    fn fuse_adds_elementwise() {
        assert_eq!(fuse(&[1.0, 2.0], &[0.5, -1.0]).unwrap(), vec![1.5, 1.0]);
        assert_eq!(fuse(&[1.0], &[0.0]).unwrap(), vec![1.0]);
        let a = [0.3, 0.7];
        let b = [1.1, -0.2];
        assert_eq!(fuse(&a, &b).unwrap(), fuse(&b, &a).unwrap());
        assert!(fuse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn relation_mix_distinct_vs_bag() {
        let rel = Tensor2::from_vec(7, 1, (1..=7).map(|v| v as f64).collect()).unwrap();
        let (set_mix, set_w) =
            relation_mix(&[5, 5, 4], &rel, RelationSum::Distinct).unwrap();
        assert_eq!(set_mix, vec![4.0 + 5.0]);
        assert_eq!(set_w, vec![(3, 1.0), (4, 1.0)]);
        let (bag_mix, bag_w) = relation_mix(&[5, 5, 4], &rel, RelationSum::Bag).unwrap();
        assert_eq!(bag_mix, vec![4.0 + 10.0]);
        assert_eq!(bag_w, vec![(3, 1.0), (4, 2.0)]);
        assert!(relation_mix(&[], &rel, RelationSum::Distinct).is_err());
    }

    #[test]
    fn zero_params_score_zero() {
        let mut params = MdmParams::init(hyper(3, 2, 1, 1), 0).unwrap();
        params.scale_all(0.0);
        let s = score(&[5, 5, 4], &params, &MdmConfig::default()).unwrap();
        assert_eq!(s, 0.0);
    }

    // the worked shape audit: d = 32, n = 3 over a 9-step sequence
    #[test]
    fn shape_audit_on_reference_sequence() {
        let params = MdmParams::init(hyper(32, 3, 2, 2), 1).unwrap();
        let seq = vec![5, 5, 5, 4, 4, 3, 5, 4, 4];
        let cfg = MdmConfig::default();
        let fwd = user_forward(&seq, &params, &cfg).unwrap();
        assert_eq!(fwd.gru.hidden.len(), 9);
        assert!(fwd.gru.hidden.iter().all(|h| h.len() == 32));
        let lstm = fwd.lstm.as_ref().unwrap();
        assert_eq!(lstm.hidden.len(), 9);
        let window = fwd.window.as_ref().unwrap();
        assert_eq!((window.rows.rows(), window.rows.cols()), (3, 32));
        for (j, src) in [8usize, 7, 6].iter().enumerate() {
            assert_eq!(window.rows.row(j), &lstm.hidden[*src][..]);
        }
        assert_eq!(fwd.fused.len(), 32);
        let union = fwd.union.as_ref().unwrap();
        assert_eq!(union.stack.last().unwrap().len(), 32);
        assert_eq!(extract_features(&fwd, &params, FeatureMode::Sum).len(), 3 * 32);
        assert_eq!(
            extract_features(&fwd, &params, FeatureMode::ConcatAll).len(),
            (2 + 7) * 32
        );
        assert_eq!(feature_width(Stage::Full, FeatureMode::ConcatAll, 32, 7), 288);
    }

    #[test]
    fn changing_early_history_moves_the_last_state_but_not_the_window_shape() {
        let params = MdmParams::init(hyper(4, 2, 1, 1), 3).unwrap();
        let cfg = MdmConfig::default();
        let a = user_forward(&[1, 2, 3, 4, 5], &params, &cfg).unwrap();
        let b = user_forward(&[2, 2, 3, 4, 5], &params, &cfg).unwrap();
        let za = a.lstm.as_ref().unwrap().hidden.last().unwrap().clone();
        let zb = b.lstm.as_ref().unwrap().hidden.last().unwrap().clone();
        assert_ne!(za, zb);
        assert_eq!(a.window.as_ref().unwrap().mask, b.window.as_ref().unwrap().mask);
    }

    #[test]
    fn stages_produce_distinct_user_vectors() {
        let params = MdmParams::init(hyper(4, 3, 2, 2), 8).unwrap();
        let seq = vec![5, 5, 3, 4, 4, 4];
        let mut got = Vec::new();
        for stage in
            [Stage::Representation, Stage::LongTerm, Stage::Individual, Stage::Full]
        {
            let cfg = MdmConfig { stage, ..MdmConfig::default() };
            let fwd = user_forward(&seq, &params, &cfg).unwrap();
            assert_eq!(fwd.fused.len(), 4);
            got.push(fwd.fused);
        }
        assert_ne!(got[0], got[1]);
        assert_ne!(got[1], got[2]);
        assert_ne!(got[2], got[3]);
    }

    fn fd_check_stage(stage: Stage, seqs: &[&[RelationId]]) -> f64 {
        let params = MdmParams::init(hyper(4, 2, 2, 2), 17).unwrap();
        let cfg = MdmConfig { stage, ..MdmConfig::default() };

        // loss = sum_u tanh(score_u): nonlinear in the score so every path
        // gets a nontrivial upstream gradient
        let mut grads = params.zeros_like();
        for seq in seqs {
            let fwd = user_forward(seq, &params, &cfg).unwrap();
            user_backward(&fwd, &params, &cfg, 1.0 - fwd.score.tanh().powi(2), &mut grads)
                .unwrap();
        }

        let mut flat = params.flatten();
        let analytic = grads.flatten();
        let mut scratch = params.clone();
        let mut loss = |p: &[f64]| {
            scratch.assign_from_flat(p)?;
            let mut total = 0.0;
            for seq in seqs {
                total += score(seq, &scratch, &cfg)?.tanh();
            }
            Ok(total)
        };
        finite_diff_check(&mut loss, &mut flat, &analytic, 1e-5, None).unwrap()
    }

    #[test]
    fn full_stage_gradients_match_central_differences() {
        let err = fd_check_stage(Stage::Full, &[&[5, 5, 5, 4], &[3, 2, 4, 1, 6], &[4, 4]]);
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn earlier_stage_gradients_match_central_differences() {
        for stage in [Stage::Representation, Stage::LongTerm, Stage::Individual] {
            let err = fd_check_stage(stage, &[&[5, 5, 4], &[3, 2, 4, 1]]);
            assert!(err < 1e-6, "stage {:?}: max relative error {err}", stage);
        }
    }

    #[test]
    fn lag_only_single_step_sequence_errors_cleanly() {
        let params = MdmParams::init(hyper(3, 2, 1, 1), 2).unwrap();
        let cfg = MdmConfig { window_mode: WindowMode::LagOnly, ..MdmConfig::default() };
        assert!(user_forward(&[5], &params, &cfg).is_err());
        let ok = MdmConfig::default();
        assert!(user_forward(&[5], &params, &ok).is_ok());
    }

    #[test]
    fn flatten_roundtrip_and_frobenius() {
        let params = MdmParams::init(hyper(3, 2, 2, 1), 5).unwrap();
        let flat = params.flatten();
        let mut other = MdmParams::init(hyper(3, 2, 2, 1), 99).unwrap();
        other.assign_from_flat(&flat).unwrap();
        assert_eq!(other, params);
        let frob: f64 = flat.iter().map(|v| v * v).sum();
        assert!((params.frobenius_sq() - frob).abs() < 1e-12);
    }
}
