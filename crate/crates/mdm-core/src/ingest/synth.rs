//! Seeded synthetic corpus generator.
//!
//! Normal users come in three cohorts: plain social walkers over a
//! first-order transition table, heavy gamers who play in sessions (runs of
//! game interactions broken by social interludes), and chatty messagers.
//! Spammers reuse the very same session machinery — farmers grind the game
//! relations, blasters push message bursts — so relation composition and
//! bigram mass overlap the normal cohorts on purpose. What separates the
//! classes is order: structured normal users always wind down with a short
//! run and a social cooldown, while spammers always close on the thing they
//! are spamming (a long grind run or a message blast). A fixed share of
//! spammers replay verbatim burst templates.
//!
//! The tables below are versioned constants: downstream thresholds are tuned
//! against them, so any change must bump [`BEHAVIOR_VERSION`].

use super::{build_sequences, Corpus, Event, Label, RelationId, UserId};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Bump when any behavior table or sampling rule changes.
pub const BEHAVIOR_VERSION: u32 = 1;

const REL_COUNT: usize = 7;

// Relation ids: 1 gift, 2 friend request, 3 profile view, 4 message,
// 5 pet game, 6 meet-me game, 7 abuse report.

// Self-transitions are kept modest so a plain walker only rarely strings
// together the long single-relation runs that the burst cohorts produce.
const SOCIAL_INIT: [f64; REL_COUNT] = [0.05, 0.10, 0.45, 0.10, 0.15, 0.13, 0.02];
const SOCIAL_TRANS: [[f64; REL_COUNT]; REL_COUNT] = [
    [0.05, 0.10, 0.20, 0.40, 0.12, 0.10, 0.03], // after gift
    [0.10, 0.05, 0.20, 0.40, 0.12, 0.11, 0.02], // after friend request
    [0.05, 0.30, 0.25, 0.15, 0.12, 0.11, 0.02], // after profile view
    [0.08, 0.12, 0.25, 0.18, 0.17, 0.18, 0.02], // after message
    [0.05, 0.10, 0.24, 0.15, 0.22, 0.22, 0.02], // after pet game
    [0.05, 0.10, 0.24, 0.15, 0.24, 0.20, 0.02], // after meet-me game
    [0.03, 0.07, 0.45, 0.15, 0.15, 0.14, 0.01], // after abuse report
];

// Normal cohort shares.
const GAMER_SHARE: f64 = 0.25;
const MESSAGER_SHARE: f64 = 0.10;

// Session machinery shared by gamers and farmers: same run-length law and
// the same interlude odds, so their bigram mass is deliberately close.
const RUN_PET: f64 = 0.60; // pet game vs meet-me for a run
const INTERLUDE_P: f64 = 0.50;
const MESSAGE_MINIRUN_P: f64 = 0.25;

// Wind-down steps never include messages, so a message-final window always
// means a blast, not a chat that petered out.
const COOLDOWN_STEP: [f64; REL_COUNT] = [0.10, 0.25, 0.45, 0.00, 0.10, 0.10, 0.00];

// Share of spammers that replay a verbatim burst template.
const TEMPLATE_SHARE: f64 = 0.25;
const SPAM_TEMPLATES: [&[RelationId]; 3] =
    [&[5, 5, 5, 5, 5, 5], &[5, 5, 5, 5, 5, 4], &[4, 4, 3, 5, 4, 4]];

// Non-template spammers: farmers grind the game relations, blasters push
// message bursts behind thin friending camouflage.
const FARMER_SHARE: f64 = 0.55;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub spam_fraction: f64,
    pub mean_length: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { users: 1000, spam_fraction: 0.0445, mean_length: 21.0, seed: 7 }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::invalid("synth: users must be at least 1"));
        }
        if !(self.spam_fraction > 0.0 && self.spam_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "synth: spam_fraction must lie in (0,1), got {}",
                self.spam_fraction
            )));
        }
        if !(self.mean_length >= 2.0) {
            return Err(Error::invalid(format!(
                "synth: mean_length must be at least 2, got {}",
                self.mean_length
            )));
        }
        Ok(())
    }
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64; REL_COUNT]) -> RelationId {
    let total: f64 = weights.iter().sum();
    let mut ticket = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        ticket -= w;
        if ticket < 0.0 {
            return i + 1;
        }
    }
    REL_COUNT
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    // Knuth's product method; fine for the double-digit means used here.
    let limit = (-mean).exp();
    let mut k = 0usize;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen_range(0.0..1.0);
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

/// Failures before the first success of a Bernoulli(p) stream.
fn geometric(rng: &mut ChaCha8Rng, p: f64) -> usize {
    let mut k = 0usize;
    while !rng.gen_bool(p) {
        k += 1;
        if k > 64 {
            break;
        }
    }
    k
}

fn markov_walk(
    rng: &mut ChaCha8Rng,
    init: &[f64; REL_COUNT],
    trans: &[[f64; REL_COUNT]; REL_COUNT],
    len: usize,
) -> Vec<RelationId> {
    let mut seq = Vec::with_capacity(len);
    let mut current = pick(rng, init);
    seq.push(current);
    while seq.len() < len {
        current = pick(rng, &trans[current - 1]);
        seq.push(current);
    }
    seq
}

/// A couple of plausible-looking social steps between runs. Farmers use the
/// exact same interludes as gamers, which is the point.
fn social_interlude(rng: &mut ChaCha8Rng, out: &mut Vec<RelationId>, max_steps: usize) {
    let steps = 1 + geometric(rng, 0.6).min(max_steps - 1);
    let mut current = pick(rng, &SOCIAL_INIT);
    for _ in 0..steps {
        out.push(current);
        current = pick(rng, &SOCIAL_TRANS[current - 1]);
    }
}

fn game_run_relation(rng: &mut ChaCha8Rng) -> RelationId {
    if rng.gen_bool(RUN_PET) {
        5
    } else {
        6
    }
}

/// Runs of game interactions with interludes; the common body of gamer and
/// farmer sequences.
fn game_session_body(rng: &mut ChaCha8Rng, out: &mut Vec<RelationId>, target_len: usize) {
    while out.len() < target_len {
        let rel = game_run_relation(rng);
        let run = 4 + geometric(rng, 0.45);
        out.extend(std::iter::repeat(rel).take(run));
        if rng.gen_bool(INTERLUDE_P) {
            social_interlude(rng, out, 3);
        }
        if rng.gen_bool(MESSAGE_MINIRUN_P) {
            let msgs = 1 + geometric(rng, 0.5).min(2);
            out.extend(std::iter::repeat(4).take(msgs));
        }
    }
}

fn cooldown(rng: &mut ChaCha8Rng, out: &mut Vec<RelationId>, min_steps: usize, slack: usize) {
    let steps = min_steps + geometric(rng, 0.5).min(slack);
    for _ in 0..steps {
        out.push(pick(rng, &COOLDOWN_STEP));
    }
}

/// A farmer looks like a gamer until the end: the sequence closes on a long
/// grind run, half the time followed by the messages it was building toward.
fn farmer_sequence(rng: &mut ChaCha8Rng, target_len: usize) -> Vec<RelationId> {
    let mut seq = Vec::with_capacity(target_len + 8);
    game_session_body(rng, &mut seq, target_len.saturating_sub(5));
    let rel = game_run_relation(rng);
    let burst = 4 + geometric(rng, 0.5).min(4);
    seq.extend(std::iter::repeat(rel).take(burst));
    if rng.gen_bool(0.5) {
        let msgs = 1 + geometric(rng, 0.5).min(2);
        seq.extend(std::iter::repeat(4).take(msgs));
    }
    seq
}

/// A real player winds down: a short last run, then a social cooldown.
fn gamer_sequence(rng: &mut ChaCha8Rng, target_len: usize) -> Vec<RelationId> {
    let mut seq = Vec::with_capacity(target_len + 8);
    game_session_body(rng, &mut seq, target_len.saturating_sub(6));
    let rel = game_run_relation(rng);
    let run = 2 + geometric(rng, 0.6).min(2);
    seq.extend(std::iter::repeat(rel).take(run));
    cooldown(rng, &mut seq, 3, 3);
    seq
}

/// Chatty but legitimate: message runs with social steps in between, and a
/// cooldown that never ends on a message.
fn messager_sequence(rng: &mut ChaCha8Rng, target_len: usize) -> Vec<RelationId> {
    let mut seq = Vec::with_capacity(target_len + 6);
    while seq.len() < target_len.saturating_sub(4) {
        let run = 3 + geometric(rng, 0.45);
        seq.extend(std::iter::repeat(4).take(run));
        let steps = 1 + geometric(rng, 0.6).min(2);
        for _ in 0..steps {
            seq.push(pick(rng, &COOLDOWN_STEP));
        }
    }
    cooldown(rng, &mut seq, 2, 2);
    seq
}

/// Message bursts behind thin friending camouflage, closing on the blast.
fn blaster_sequence(rng: &mut ChaCha8Rng, target_len: usize) -> Vec<RelationId> {
    let mut seq = Vec::with_capacity(target_len + 8);
    while seq.len() < target_len.saturating_sub(5) {
        if rng.gen_bool(0.5) {
            let steps = 1 + geometric(rng, 0.6).min(1);
            for _ in 0..steps {
                seq.push(if rng.gen_bool(0.6) { 2 } else { 3 });
            }
        }
        let burst = 3 + geometric(rng, 0.45);
        seq.extend(std::iter::repeat(4).take(burst));
    }
    let burst = 4 + geometric(rng, 0.5).min(3);
    seq.extend(std::iter::repeat(4).take(burst));
    seq
}

fn spam_sequence(rng: &mut ChaCha8Rng, mean_length: f64) -> Vec<RelationId> {
    if rng.gen_bool(TEMPLATE_SHARE) {
        let idx = rng.gen_range(0..SPAM_TEMPLATES.len());
        return SPAM_TEMPLATES[idx].to_vec();
    }
    let target = poisson(rng, mean_length).max(4);
    if rng.gen_bool(FARMER_SHARE) {
        farmer_sequence(rng, target)
    } else {
        blaster_sequence(rng, target)
    }
}

fn normal_sequence(rng: &mut ChaCha8Rng, mean_length: f64) -> Vec<RelationId> {
    let len = poisson(rng, mean_length).max(2);
    let cohort = rng.gen_range(0.0..1.0);
    if cohort < GAMER_SHARE {
        gamer_sequence(rng, len)
    } else if cohort < GAMER_SHARE + MESSAGER_SHARE {
        messager_sequence(rng, len)
    } else {
        markov_walk(rng, &SOCIAL_INIT, &SOCIAL_TRANS, len)
    }
}

/// Generate the two-file corpus content: events plus a full label map.
/// Deterministic in `cfg.seed`; user ids are `0..users`.
pub fn synth_events(cfg: &SynthConfig) -> Result<(Vec<Event>, BTreeMap<UserId, Label>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut labels = BTreeMap::new();
    for user in 0..cfg.users as UserId {
        let label =
            if rng.gen_bool(cfg.spam_fraction) { Label::Spammer } else { Label::Normal };
        labels.insert(user, label);
    }

    let mut events = Vec::new();
    for user in 0..cfg.users as UserId {
        let seq = match labels[&user] {
            Label::Spammer => spam_sequence(&mut rng, cfg.mean_length),
            Label::Normal => normal_sequence(&mut rng, cfg.mean_length),
        };
        let mut ts = 1_000_000 + user as i64 * 4096;
        for rel in seq {
            ts += rng.gen_range(1..=5);
            let dst = rng.gen_range(0..cfg.users) as UserId;
            events.push(Event { timestamp: ts, src: user, dst, relation: rel });
        }
    }
    Ok((events, labels))
}

/// [`synth_events`] followed by sequence building.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<Corpus> {
    let (events, labels) = synth_events(cfg)?;
    build_sequences(&events, &labels, REL_COUNT)
}
