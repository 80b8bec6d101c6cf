//! Soft attention used at two places: over the rows of each windowed
//! residual layer (picking out which recent actions matter) and over the
//! per-layer context vectors (picking out which interaction order matters).
//! Both share one scoring shape: scalar score = w_out . tanh(x W_hidden + b_hidden) + b_out,
//! softmaxed across candidates. The row scorer's parameters are shared
//! across every layer of the residual stack.

use crate::numerics::{axpy, dot, outer_acc, softmax, vec_mat, vec_mat_t, Tensor2};
use crate::{Error, Result};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    /// Row scorer (shared across stack depths).
    pub row_hidden_w: Tensor2,
    pub row_hidden_b: Vec<f64>,
    pub row_out_w: Vec<f64>,
    pub row_out_b: f64,
    /// Order scorer over the context-vector stack.
    pub order_hidden_w: Tensor2,
    pub order_hidden_b: Vec<f64>,
    pub order_out_w: Vec<f64>,
    pub order_out_b: f64,
}

impl AttentionParams {
    pub fn zeros(d: usize) -> Self {
        AttentionParams {
            row_hidden_w: Tensor2::zeros(d, d),
            row_hidden_b: vec![0.0; d],
            row_out_w: vec![0.0; d],
            row_out_b: 0.0,
            order_hidden_w: Tensor2::zeros(d, d),
            order_hidden_b: vec![0.0; d],
            order_out_w: vec![0.0; d],
            order_out_b: 0.0,
        }
    }

    pub fn uniform(d: usize, limit: f64, rng: &mut impl Rng) -> Self {
        AttentionParams {
            row_hidden_w: Tensor2::uniform(d, d, limit, rng),
            row_hidden_b: (0..d).map(|_| rng.gen_range(-limit..limit)).collect(),
            row_out_w: (0..d).map(|_| rng.gen_range(-limit..limit)).collect(),
            row_out_b: rng.gen_range(-limit..limit),
            order_hidden_w: Tensor2::uniform(d, d, limit, rng),
            order_hidden_b: (0..d).map(|_| rng.gen_range(-limit..limit)).collect(),
            order_out_w: (0..d).map(|_| rng.gen_range(-limit..limit)).collect(),
            order_out_b: rng.gen_range(-limit..limit),
        }
    }

    pub fn zeros_like(&self) -> Self {
        AttentionParams::zeros(self.row_hidden_w.cols())
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.row.hw"), self.row_hidden_w.data_mut());
        f(&format!("{prefix}.row.hb"), &mut self.row_hidden_b);
        f(&format!("{prefix}.row.ow"), &mut self.row_out_w);
        f(&format!("{prefix}.row.ob"), std::slice::from_mut(&mut self.row_out_b));
        f(&format!("{prefix}.order.hw"), self.order_hidden_w.data_mut());
        f(&format!("{prefix}.order.hb"), &mut self.order_hidden_b);
        f(&format!("{prefix}.order.ow"), &mut self.order_out_w);
        f(&format!("{prefix}.order.ob"), std::slice::from_mut(&mut self.order_out_b));
    }
}

#[derive(Clone, Debug)]
pub struct RowAttnCache {
    /// tanh(h_i W + b) per row; zero vectors on masked rows.
    pub hidden: Vec<Vec<f64>>,
    /// Softmax weights; exactly zero on masked rows.
    pub weights: Vec<f64>,
}

/// Attend over the unmasked rows of `h`. Returns the weighted row blend and
/// the cache for backward. Errors when every row is masked.
pub fn row_attention(
    h: &Tensor2,
    mask: &[bool],
    params: &AttentionParams,
) -> Result<(Vec<f64>, RowAttnCache)> {
    let d = params.row_hidden_w.cols();
    if h.cols() != d {
        return Err(Error::shape(format!("row_attention: rows of width {} vs {}", h.cols(), d)));
    }
    if mask.len() != h.rows() {
        return Err(Error::shape("row_attention: mask length vs row count"));
    }
    let live: Vec<usize> = (0..h.rows()).filter(|&i| mask[i]).collect();
    if live.is_empty() {
        return Err(Error::invalid("row_attention: all rows are masked"));
    }

    let mut hidden = vec![vec![0.0; d]; h.rows()];
    let mut scores = Vec::with_capacity(live.len());
    for &i in &live {
        let mut pre = vec_mat(h.row(i), &params.row_hidden_w);
        axpy(&mut pre, &params.row_hidden_b, 1.0);
        let th: Vec<f64> = pre.iter().map(|&v| v.tanh()).collect();
        scores.push(dot(&th, &params.row_out_w) + params.row_out_b);
        hidden[i] = th;
    }
    let live_weights = softmax(&scores)?;
    let mut weights = vec![0.0; h.rows()];
    for (slot, &i) in live.iter().enumerate() {
        weights[i] = live_weights[slot];
    }

    let mut blend = vec![0.0; d];
    for &i in &live {
        axpy(&mut blend, h.row(i), weights[i]);
    }
    Ok((blend, RowAttnCache { hidden, weights }))
}

/// Backward for [`row_attention`]: `d_blend` flows into the attention
/// parameters and into `d_rows` (same shape as `h`).
pub fn row_attention_backward(
    h: &Tensor2,
    mask: &[bool],
    params: &AttentionParams,
    cache: &RowAttnCache,
    d_blend: &[f64],
    grads: &mut AttentionParams,
    d_rows: &mut Tensor2,
) {
    let live: Vec<usize> = (0..h.rows()).filter(|&i| mask[i]).collect();
    // blend = sum_i w_i h_i
    let mut d_weights = vec![0.0; h.rows()];
    for &i in &live {
        d_weights[i] = dot(d_blend, h.row(i));
        axpy(d_rows.row_mut(i), d_blend, cache.weights[i]);
    }
    // softmax backward over the live rows
    let inner: f64 = live.iter().map(|&i| cache.weights[i] * d_weights[i]).sum();
    for &i in &live {
        let d_score = cache.weights[i] * (d_weights[i] - inner);
        // score = out_w . tanh_hidden + out_b
        axpy(&mut grads.row_out_w, &cache.hidden[i], d_score);
        grads.row_out_b += d_score;
        let mut d_tanh: Vec<f64> = params.row_out_w.iter().map(|&w| w * d_score).collect();
        for (j, t) in cache.hidden[i].iter().enumerate() {
            d_tanh[j] *= 1.0 - t * t;
        }
        outer_acc(&mut grads.row_hidden_w, h.row(i), &d_tanh);
        axpy(&mut grads.row_hidden_b, &d_tanh, 1.0);
        axpy(d_rows.row_mut(i), &vec_mat_t(&d_tanh, &params.row_hidden_w), 1.0);
    }
}

#[derive(Clone, Debug)]
pub struct OrderAttnCache {
    pub hidden: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Attend over the per-layer context vectors; every entry participates.
pub fn order_attention(
    stack: &[Vec<f64>],
    params: &AttentionParams,
) -> Result<(Vec<f64>, OrderAttnCache)> {
    if stack.is_empty() {
        return Err(Error::invalid("order_attention: empty context stack"));
    }
    let d = params.order_hidden_w.cols();
    let mut hidden = Vec::with_capacity(stack.len());
    let mut scores = Vec::with_capacity(stack.len());
    for v in stack {
        if v.len() != d {
            return Err(Error::shape(format!(
                "order_attention: context of width {} vs {}",
                v.len(),
                d
            )));
        }
        let mut pre = vec_mat(v, &params.order_hidden_w);
        axpy(&mut pre, &params.order_hidden_b, 1.0);
        let th: Vec<f64> = pre.iter().map(|&x| x.tanh()).collect();
        scores.push(dot(&th, &params.order_out_w) + params.order_out_b);
        hidden.push(th);
    }
    let weights = softmax(&scores)?;
    let mut blend = vec![0.0; d];
    for (v, &w) in stack.iter().zip(&weights) {
        axpy(&mut blend, v, w);
    }
    Ok((blend, OrderAttnCache { hidden, weights }))
}

pub fn order_attention_backward(
    stack: &[Vec<f64>],
    params: &AttentionParams,
    cache: &OrderAttnCache,
    d_blend: &[f64],
    grads: &mut AttentionParams,
    d_stack: &mut [Vec<f64>],
) {
    let mut d_weights = vec![0.0; stack.len()];
    for (l, v) in stack.iter().enumerate() {
        d_weights[l] = dot(d_blend, v);
        axpy(&mut d_stack[l], d_blend, cache.weights[l]);
    }
    let inner: f64 = cache.weights.iter().zip(&d_weights).map(|(w, dw)| w * dw).sum();
    for (l, v) in stack.iter().enumerate() {
        let d_score = cache.weights[l] * (d_weights[l] - inner);
        axpy(&mut grads.order_out_w, &cache.hidden[l], d_score);
        grads.order_out_b += d_score;
        let mut d_tanh: Vec<f64> = params.order_out_w.iter().map(|&w| w * d_score).collect();
        for (j, t) in cache.hidden[l].iter().enumerate() {
            d_tanh[j] *= 1.0 - t * t;
        }
        outer_acc(&mut grads.order_hidden_w, v, &d_tanh);
        axpy(&mut grads.order_hidden_b, &d_tanh, 1.0);
        axpy(&mut d_stack[l], &vec_mat_t(&d_tanh, &params.order_hidden_w), 1.0);
    }
}
