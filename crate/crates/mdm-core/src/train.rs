//! Pairwise ranking trainer.
//!
//! Each training pair joins one spammer with one normal user; the loss asks
//! the spammer to outscore the normal: `-ln sigmoid(score_s - score_l)`,
//! plus an L2 penalty `(lambda/2) * ||theta||^2` over the tensors the
//! configured stage actually trains. Batches sample pairs uniformly; users
//! appearing in several pairs of a batch run forward once with their score
//! gradients summed.

use crate::ingest::{Corpus, Label};
use crate::model::{user_backward, user_forward, MdmConfig, MdmParams, Stage};
use crate::numerics::{axpy, sigmoid, AdamConfig, AdamState};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_pairs: usize,
    /// Batches per epoch; default covers the labeled population once.
    pub batches_per_epoch: Option<usize>,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Stop once the relative change of the epoch-mean pair loss drops
    /// below this.
    pub tol: f64,
    /// Keep the pretrained encoder and relation embeddings fixed.
    pub freeze_embed: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_pairs: 64,
            batches_per_epoch: None,
            learning_rate: 1e-3,
            lambda: 1e-4,
            seed: 7,
            tol: 1e-5,
            freeze_embed: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_pairs == 0 {
            return Err(Error::invalid("train: batch_pairs must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda >= 0.0) || !(self.tol >= 0.0) {
            return Err(Error::invalid(
                "train: learning_rate must be positive, lambda and tol non-negative",
            ));
        }
        Ok(())
    }
}

/// Whether a named tensor is trained at a stage. The earlier the stage cuts
/// the pipeline, the fewer tensor groups carry gradient.
pub fn tensor_active(name: &str, stage: Stage, freeze_embed: bool) -> bool {
    if name.starts_with("embed") {
        return !freeze_embed;
    }
    match stage {
        Stage::Representation => false,
        Stage::LongTerm => name.starts_with("lstm"),
        Stage::Individual => {
            name.starts_with("lstm") || name.starts_with("ind") || name.starts_with("attn")
        }
        Stage::Full => true,
    }
}

/// Squared Frobenius norm over the active tensors only.
pub fn active_frobenius_sq(params: &MdmParams, stage: Stage, freeze_embed: bool) -> f64 {
    let mut total = 0.0;
    params.clone().visit_mut(&mut |name, data| {
        if tensor_active(name, stage, freeze_embed) {
            total += data.iter().map(|v| v * v).sum::<f64>();
        }
    });
    total
}

/// `-ln sigmoid(score_s - score_l)`, evaluated without overflow.
pub fn pair_loss(score_s: f64, score_l: f64) -> f64 {
    let delta = score_s - score_l;
    // softplus(-delta)
    (-delta.abs()).exp().ln_1p() + (-delta).max(0.0)
}

/// Mean pair loss over `pairs` (indices into `corpus.sequences`), with score
/// gradients pushed into `grads` when given. Users repeated across pairs
/// forward once.
pub fn batch_loss(
    corpus: &Corpus,
    params: &MdmParams,
    cfg: &MdmConfig,
    pairs: &[(usize, usize)],
    mut grads: Option<&mut MdmParams>,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("train: empty pair batch"));
    }
    let mut forwards = BTreeMap::new();
    for &(s, l) in pairs {
        for idx in [s, l] {
            if !forwards.contains_key(&idx) {
                let seq = corpus
                    .sequences
                    .get(idx)
                    .ok_or_else(|| Error::invalid(format!("train: no sequence at index {idx}")))?;
                forwards.insert(idx, user_forward(&seq.relations, params, cfg)?);
            }
        }
    }
    let inv = 1.0 / pairs.len() as f64;
    let mut total = 0.0;
    let mut d_score: BTreeMap<usize, f64> = BTreeMap::new();
    for &(s, l) in pairs {
        let delta = forwards[&s].score - forwards[&l].score;
        total += pair_loss(forwards[&s].score, forwards[&l].score);
        // d loss / d delta = sigmoid(delta) - 1
        let d_delta = (sigmoid(delta) - 1.0) * inv;
        *d_score.entry(s).or_insert(0.0) += d_delta;
        *d_score.entry(l).or_insert(0.0) -= d_delta;
    }
    if let Some(grads) = grads.as_deref_mut() {
        for (idx, fwd) in &forwards {
            user_backward(fwd, params, cfg, d_score[idx], grads)?;
        }
    }
    Ok(total * inv)
}

#[derive(Clone, Copy, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_pair_loss: f64,
    pub penalty: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    pub stopped_early: bool,
}

/// Split the labeled sequence indices by class.
pub fn class_indices(corpus: &Corpus) -> (Vec<usize>, Vec<usize>) {
    let mut spammers = Vec::new();
    let mut normals = Vec::new();
    for (i, seq) in corpus.sequences.iter().enumerate() {
        match seq.label {
            Some(Label::Spammer) => spammers.push(i),
            Some(Label::Normal) => normals.push(i),
            None => {}
        }
    }
    (spammers, normals)
}

/// Train `params` in place on the labeled users of `corpus`; returns the
/// per-epoch loss trace. A stage with nothing to train returns an empty
/// trace and leaves the parameters untouched.
pub fn train_ranking(
    corpus: &Corpus,
    params: &mut MdmParams,
    cfg: &MdmConfig,
    tcfg: &TrainConfig,
) -> Result<TrainTrace> {
    tcfg.validate()?;
    let mut names = Vec::new();
    params.visit_mut(&mut |name, _| names.push(name.to_string()));
    let any_active =
        names.iter().any(|n| tensor_active(n, cfg.stage, tcfg.freeze_embed));
    if !any_active || tcfg.epochs == 0 {
        return Ok(TrainTrace::default());
    }

    let (spammers, normals) = class_indices(corpus);
    if spammers.is_empty() || normals.is_empty() {
        return Err(Error::invalid(
            "train: need labeled users of both classes to form ranking pairs",
        ));
    }
    let labeled = spammers.len() + normals.len();
    let batches =
        tcfg.batches_per_epoch.unwrap_or_else(|| labeled.div_ceil(tcfg.batch_pairs)).max(1);

    let adam = AdamConfig { learning_rate: tcfg.learning_rate, ..AdamConfig::default() };
    let mut states: Vec<AdamState> = Vec::new();
    params.visit_mut(&mut |_, data| states.push(AdamState::new(data.len(), adam)));

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut trace = TrainTrace::default();
    for epoch in 0..tcfg.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..batches {
            let pairs: Vec<(usize, usize)> = (0..tcfg.batch_pairs)
                .map(|_| {
                    (
                        spammers[rng.gen_range(0..spammers.len())],
                        normals[rng.gen_range(0..normals.len())],
                    )
                })
                .collect();
            let mut grads = params.zeros_like();
            epoch_loss += batch_loss(corpus, params, cfg, &pairs, Some(&mut grads))?;

            let gflat = grads.flatten();
            let mut cursor = 0usize;
            let mut slot = 0usize;
            let mut failed = None;
            params.visit_mut(&mut |name, data| {
                let g = &gflat[cursor..cursor + data.len()];
                cursor += data.len();
                let state = &mut states[slot];
                slot += 1;
                if tensor_active(name, cfg.stage, tcfg.freeze_embed) {
                    let mut with_penalty = g.to_vec();
                    axpy(&mut with_penalty, data, tcfg.lambda);
                    if let Err(e) = state.update(data, &with_penalty) {
                        failed = Some(e);
                    }
                }
            });
            if let Some(e) = failed {
                return Err(e);
            }
        }
        let mean = epoch_loss / batches as f64;
        let penalty = 0.5
            * tcfg.lambda
            * active_frobenius_sq(params, cfg.stage, tcfg.freeze_embed);
        trace.epochs.push(EpochStats { epoch, mean_pair_loss: mean, penalty });
        if epoch > 0 {
            let prev = trace.epochs[epoch - 1].mean_pair_loss;
            let rel = (mean - prev).abs() / prev.abs().max(1e-12);
            if rel < tcfg.tol {
                trace.stopped_early = true;
                break;
            }
        }
    }
    Ok(trace)
}
