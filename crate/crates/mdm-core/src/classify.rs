//! Classification protocol: stratified split, feature standardization,
//! L2-regularized logistic regression fit by damped Newton steps, and
//! precision/recall/F reporting with spammers as the positive class.
//!
//! The regression objective is the sum form
//! `J = sum_i softplus(-y_i z_i) + (1/(2C)) ||w||^2` with the bias left
//! unpenalized, so class weights follow the raw counts rather than the
//! class shares.

use crate::ingest::Label;
use crate::numerics::{cholesky_solve, dot, sigmoid, Tensor2};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct LrConfig {
    /// Inverse regularization strength.
    pub c: f64,
    /// Convergence threshold on the gradient's max norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { c: 1.0, tol: 1e-4, max_iter: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value after every Newton step, starting with the initial
    /// all-zero parameters. Non-increasing.
    pub objective_trace: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn target(label: Label) -> f64 {
    match label {
        Label::Spammer => 1.0,
        Label::Normal => 0.0,
    }
}

fn objective(x: &Tensor2, y: &[Label], w: &[f64], b: f64, c: f64) -> f64 {
    let mut j = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let z = dot(x.row(i), w) + b;
        // softplus(-yz) with y in {-1, +1}
        let signed = if target(label) > 0.5 { -z } else { z };
        j += softplus(signed);
    }
    j + w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c)
}

/// Fit by Newton iterations with backtracking; the weight block of the
/// Hessian carries the ridge `1/C`, the bias block does not.
pub fn lr_fit(x: &Tensor2, y: &[Label], cfg: &LrConfig) -> Result<LrModel> {
    let n = x.rows();
    let p = x.cols();
    if n == 0 || n != y.len() {
        return Err(Error::shape(format!("lr: {} rows vs {} labels", n, y.len())));
    }
    if !(cfg.c > 0.0) {
        return Err(Error::invalid("lr: C must be positive"));
    }
    let positives = y.iter().filter(|&&l| l == Label::Spammer).count();
    if positives == 0 || positives == n {
        return Err(Error::invalid("lr: training labels must include both classes"));
    }

    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut trace = vec![objective(x, y, &w, b, cfg.c)];

    for _ in 0..cfg.max_iter {
        // gradient and curvature at the current point
        let mut grad = vec![0.0; p + 1];
        let mut s = vec![0.0; n];
        for i in 0..n {
            let z = dot(x.row(i), &w) + b;
            let p_i = sigmoid(z);
            let resid = p_i - target(y[i]);
            for (g, &xv) in grad.iter_mut().zip(x.row(i)) {
                *g += resid * xv;
            }
            grad[p] += resid;
            // keep the Hessian positive definite even under separation
            s[i] = (p_i * (1.0 - p_i)).max(1e-10);
        }
        for (g, &wv) in grad.iter_mut().zip(&w) {
            *g += wv / cfg.c;
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < cfg.tol {
            break;
        }

        // H = X^T S X augmented with the bias row/column, ridge on weights
        let mut h = Tensor2::zeros(p + 1, p + 1);
        for i in 0..n {
            let row = x.row(i);
            let si = s[i];
            for a in 0..p {
                let ha = h.row_mut(a);
                let xa = row[a] * si;
                for (hb, &xb) in ha[..p].iter_mut().zip(row) {
                    *hb += xa * xb;
                }
                ha[p] += xa;
            }
            let hb = h.row_mut(p);
            for (hv, &xv) in hb[..p].iter_mut().zip(row) {
                *hv += si * xv;
            }
            hb[p] += si;
        }
        for a in 0..p {
            h.row_mut(a)[a] += 1.0 / cfg.c;
        }

        let step = cholesky_solve(&h, &grad)?;
        let current = *trace.last().unwrap();
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let w_try: Vec<f64> =
                w.iter().zip(&step[..p]).map(|(wv, sv)| wv - alpha * sv).collect();
            let b_try = b - alpha * step[p];
            let j_try = objective(x, y, &w_try, b_try, cfg.c);
            if j_try <= current {
                accepted = Some((w_try, b_try, j_try));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((w_new, b_new, j_new)) => {
                w = w_new;
                b = b_new;
                trace.push(j_new);
            }
            None => break,
        }
    }
    Ok(LrModel { weights: w, bias: b, objective_trace: trace })
}

pub fn predict_proba(model: &LrModel, x: &Tensor2) -> Result<Vec<f64>> {
    if x.cols() != model.weights.len() {
        return Err(Error::shape(format!(
            "lr: {} feature columns vs {} weights",
            x.cols(),
            model.weights.len()
        )));
    }
    Ok((0..x.rows()).map(|i| sigmoid(dot(x.row(i), &model.weights) + model.bias)).collect())
}

pub fn predict(model: &LrModel, x: &Tensor2, threshold: f64) -> Result<Vec<Label>> {
    Ok(predict_proba(model, x)?
        .into_iter()
        .map(|p| if p >= threshold { Label::Spammer } else { Label::Normal })
        .collect())
}

/// Confusion counts with spammer as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub tn: usize,
}

impl Metrics {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::shape("metrics: prediction and truth lengths differ"));
        }
        let mut m = Metrics::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Spammer, Label::Spammer) => m.tp += 1,
                (Label::Normal, Label::Spammer) => m.fp += 1,
                (Label::Spammer, Label::Normal) => m.fn_count += 1,
                (Label::Normal, Label::Normal) => m.tn += 1,
            }
        }
        Ok(m)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_count)
    }

    pub fn f_measure(&self) -> f64 {
        f_measure(self.precision(), self.recall())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both vanish.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Class-stratified train/test split: each class contributes its rounded
/// share of the test fraction, but always keeps at least one member on each
/// side. Index lists come back sorted.
#[derive(Clone, Debug)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn stratified_split(labels: &[Label], test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("split: test fraction must be inside (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Label::Spammer, Label::Normal] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect();
        if members.len() < 2 {
            return Err(Error::invalid(format!(
                "split: class {class:?} has {} members, need at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let want = (members.len() as f64 * test_fraction).round() as usize;
        let take = want.clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Column means and deviations learned on the training rows.
#[derive(Clone, Debug)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Tensor2, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("standardize: no rows"));
        }
        let p = x.cols();
        let inv = 1.0 / rows.len() as f64;
        let mut mean = vec![0.0; p];
        for &r in rows {
            for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                *m += v * inv;
            }
        }
        let mut var = vec![0.0; p];
        for &r in rows {
            for ((s, &v), &m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m) * inv;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = v.sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0 // constant column: leave it centered only
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, x: &Tensor2, rows: &[usize]) -> Result<Tensor2> {
        if x.cols() != self.mean.len() {
            return Err(Error::shape("standardize: column count changed"));
        }
        let mut out = Tensor2::zeros(rows.len(), x.cols());
        for (o, &r) in rows.iter().enumerate() {
            for (c, &v) in x.row(r).iter().enumerate() {
                out.row_mut(o)[c] = (v - self.mean[c]) / self.scale[c];
            }
        }
        Ok(out)
    }
}

fn gather_labels(labels: &[Label], rows: &[usize]) -> Vec<Label> {
    rows.iter().map(|&r| labels[r]).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOutcome {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// The shared protocol: split, standardize on the training rows, fit, and
/// score the held-out rows at the 0.5 threshold.
pub fn evaluate_features(
    x: &Tensor2,
    labels: &[Label],
    test_fraction: f64,
    seed: u64,
    cfg: &LrConfig,
) -> Result<EvalOutcome> {
    if x.rows() != labels.len() {
        return Err(Error::shape(format!(
            "evaluate: {} feature rows vs {} labels",
            x.rows(),
            labels.len()
        )));
    }
    let split = stratified_split(labels, test_fraction, seed)?;
    let scaler = Standardizer::fit(x, &split.train)?;
    let x_train = scaler.apply(x, &split.train)?;
    let x_test = scaler.apply(x, &split.test)?;
    let y_train = gather_labels(labels, &split.train);
    let y_test = gather_labels(labels, &split.test);
    let model = lr_fit(&x_train, &y_train, cfg)?;
    let predicted = predict(&model, &x_test, 0.5)?;
    let m = Metrics::from_predictions(&y_test, &predicted)?;
    Ok(EvalOutcome { precision: m.precision(), recall: m.recall(), f_measure: m.f_measure() })
}
