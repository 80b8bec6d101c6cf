//! Long-term sequence encoder: a standard LSTM cell over the position
//! encodings, hidden and cell state starting at zero. Backward pass is
//! hand-written; the model-level gradient check covers it.

use crate::embed::GateParams;
use crate::numerics::{axpy, outer_acc, sigmoid, vec_mat, vec_mat_t};
use crate::{Error, Result};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
}

impl LstmParams {
    pub fn zeros(d: usize) -> Self {
        LstmParams {
            input_gate: GateParams::zeros(d, d),
            forget_gate: GateParams::zeros(d, d),
            output_gate: GateParams::zeros(d, d),
            candidate: GateParams::zeros(d, d),
        }
    }

    pub fn uniform(d: usize, limit: f64, rng: &mut impl Rng) -> Self {
        LstmParams {
            input_gate: GateParams::uniform(d, d, limit, rng),
            forget_gate: GateParams::uniform(d, d, limit, rng),
            output_gate: GateParams::uniform(d, d, limit, rng),
            candidate: GateParams::uniform(d, d, limit, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams::zeros(self.input_gate.w.cols())
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.input_gate.visit_mut(&format!("{prefix}.input"), f);
        self.forget_gate.visit_mut(&format!("{prefix}.forget"), f);
        self.output_gate.visit_mut(&format!("{prefix}.output"), f);
        self.candidate.visit_mut(&format!("{prefix}.candidate"), f);
    }
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    pub inputs: Vec<Vec<f64>>,
    pub gate_i: Vec<Vec<f64>>,
    pub gate_f: Vec<Vec<f64>>,
    pub gate_o: Vec<Vec<f64>>,
    pub cand: Vec<Vec<f64>>,
    pub cell: Vec<Vec<f64>>,
    pub cell_tanh: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.hidden.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hidden.is_empty()
    }

    fn cell_before(&self, t: usize, d: usize) -> Vec<f64> {
        if t == 0 {
            vec![0.0; d]
        } else {
            self.cell[t - 1].clone()
        }
    }

    fn hidden_before(&self, t: usize, d: usize) -> Vec<f64> {
        if t == 0 {
            vec![0.0; d]
        } else {
            self.hidden[t - 1].clone()
        }
    }
}

pub fn lstm_forward(inputs: &[Vec<f64>], params: &LstmParams) -> Result<LstmCache> {
    if inputs.is_empty() {
        return Err(Error::invalid("lstm: empty input sequence"));
    }
    let d = params.input_gate.w.cols();
    let mut cache = LstmCache {
        inputs: inputs.to_vec(),
        gate_i: Vec::with_capacity(inputs.len()),
        gate_f: Vec::with_capacity(inputs.len()),
        gate_o: Vec::with_capacity(inputs.len()),
        cand: Vec::with_capacity(inputs.len()),
        cell: Vec::with_capacity(inputs.len()),
        cell_tanh: Vec::with_capacity(inputs.len()),
        hidden: Vec::with_capacity(inputs.len()),
    };
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for x in inputs {
        if x.len() != d {
            return Err(Error::shape(format!("lstm: input width {} vs cell {}", x.len(), d)));
        }
        let gate = |g: &GateParams, x: &[f64], h: &[f64]| -> Vec<f64> {
            let mut pre = vec_mat(x, &g.w);
            axpy(&mut pre, &vec_mat(h, &g.u), 1.0);
            axpy(&mut pre, &g.b, 1.0);
            pre
        };
        let i: Vec<f64> =
            gate(&params.input_gate, x, &h).iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> =
            gate(&params.forget_gate, x, &h).iter().map(|&v| sigmoid(v)).collect();
        let o: Vec<f64> =
            gate(&params.output_gate, x, &h).iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = gate(&params.candidate, x, &h).iter().map(|&v| v.tanh()).collect();

        let mut c_next = vec![0.0; d];
        for j in 0..d {
            c_next[j] = f[j] * c[j] + i[j] * g[j];
        }
        let ct: Vec<f64> = c_next.iter().map(|&v| v.tanh()).collect();
        let mut h_next = vec![0.0; d];
        for j in 0..d {
            h_next[j] = o[j] * ct[j];
        }

        cache.gate_i.push(i);
        cache.gate_f.push(f);
        cache.gate_o.push(o);
        cache.cand.push(g);
        cache.cell.push(c_next.clone());
        cache.cell_tanh.push(ct);
        cache.hidden.push(h_next.clone());
        h = h_next;
        c = c_next;
    }
    Ok(cache)
}

/// Backpropagation through time. `d_hidden[t]` is the downstream gradient on
/// hidden state `t` (dense, zeros where unused). Parameter gradients
/// accumulate into `grads`; the return value is the gradient on each input.
pub fn lstm_backward(
    cache: &LstmCache,
    params: &LstmParams,
    d_hidden: &[Vec<f64>],
    grads: &mut LstmParams,
) -> Vec<Vec<f64>> {
    let steps = cache.len();
    let d = params.input_gate.w.cols();
    assert_eq!(d_hidden.len(), steps, "one hidden gradient per step");

    let mut d_inputs = vec![vec![0.0; d]; steps];
    let mut dh = vec![0.0; d];
    let mut dc = vec![0.0; d];
    for t in (0..steps).rev() {
        axpy(&mut dh, &d_hidden[t], 1.0);

        let i = &cache.gate_i[t];
        let f = &cache.gate_f[t];
        let o = &cache.gate_o[t];
        let g = &cache.cand[t];
        let ct = &cache.cell_tanh[t];
        let c_prev = cache.cell_before(t, d);
        let h_prev = cache.hidden_before(t, d);
        let x = &cache.inputs[t];

        let mut do_ = vec![0.0; d];
        for j in 0..d {
            do_[j] = dh[j] * ct[j];
            dc[j] += dh[j] * o[j] * (1.0 - ct[j] * ct[j]);
        }
        let mut di = vec![0.0; d];
        let mut df = vec![0.0; d];
        let mut dg = vec![0.0; d];
        let mut dc_prev = vec![0.0; d];
        for j in 0..d {
            di[j] = dc[j] * g[j];
            dg[j] = dc[j] * i[j];
            df[j] = dc[j] * c_prev[j];
            dc_prev[j] = dc[j] * f[j];
        }

        let dpre_i: Vec<f64> = (0..d).map(|j| di[j] * i[j] * (1.0 - i[j])).collect();
        let dpre_f: Vec<f64> = (0..d).map(|j| df[j] * f[j] * (1.0 - f[j])).collect();
        let dpre_o: Vec<f64> = (0..d).map(|j| do_[j] * o[j] * (1.0 - o[j])).collect();
        let dpre_g: Vec<f64> = (0..d).map(|j| dg[j] * (1.0 - g[j] * g[j])).collect();

        let mut dh_prev = vec![0.0; d];
        let mut dx = vec![0.0; d];
        for (gate, dpre) in [
            (&mut grads.input_gate, &dpre_i),
            (&mut grads.forget_gate, &dpre_f),
            (&mut grads.output_gate, &dpre_o),
            (&mut grads.candidate, &dpre_g),
        ] {
            outer_acc(&mut gate.w, x, dpre);
            outer_acc(&mut gate.u, &h_prev, dpre);
            axpy(&mut gate.b, dpre, 1.0);
        }
        for (p, dpre) in [
            (&params.input_gate, &dpre_i),
            (&params.forget_gate, &dpre_f),
            (&params.output_gate, &dpre_o),
            (&params.candidate, &dpre_g),
        ] {
            axpy(&mut dx, &vec_mat_t(dpre, &p.w), 1.0);
            axpy(&mut dh_prev, &vec_mat_t(dpre, &p.u), 1.0);
        }

        d_inputs[t] = dx;
        dh = dh_prev;
        dc = dc_prev;
    }
    d_inputs
}
