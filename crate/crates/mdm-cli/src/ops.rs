//! The four pipeline commands. Each resolves its configuration, does the
//! work through mdm-core, writes its artifacts plus the effective config,
//! and prints a one-line summary. Domain failures bubble up as plain errors
//! (exit 1); a [`UsageError`] marks mistakes in how the command was invoked
//! (exit 2).

use crate::config::RunConfig;
use anyhow::{ensure, Context, Result};
use mdm_core::checkpoint::{load_model, save_model};
use mdm_core::classify::{evaluate_features, EvalOutcome, LrConfig};
use mdm_core::embed::train_embeddings;
use mdm_core::features::{build_extractor, FeatureContext, FeatureMatrix, ModelBundle};
use mdm_core::ingest::{
    build_sequences, parse_events_path, parse_labels_path, write_events, write_labels,
    Corpus, Event, Label, SynthConfig,
};
use mdm_core::model::{MdmConfig, MdmHyper, MdmParams, RelationSum};
use mdm_core::train::{train_ranking, TrainConfig};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Invocation mistake discovered after argument parsing; reported with the
/// usage exit code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

// ------------------------------------------------------------------ synth

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let scfg = SynthConfig {
        users: cfg.users,
        spam_fraction: cfg.spam,
        mean_length: cfg.mean_length,
        seed: cfg.seed,
    };
    let (events, labels) = mdm_core::ingest::synth_events(&scfg)?;

    ensure_dir(out)?;
    let mut buf = Vec::new();
    write_events(&mut buf, &events)?;
    std::fs::write(out.join("events.csv"), &buf)
        .with_context(|| format!("writing {}", out.join("events.csv").display()))?;
    let mut buf = Vec::new();
    write_labels(&mut buf, &labels)?;
    std::fs::write(out.join("labels.csv"), &buf)
        .with_context(|| format!("writing {}", out.join("labels.csv").display()))?;
    cfg.echo_into(out)?;

    let spammers = labels.values().filter(|&&l| l == Label::Spammer).count();
    println!(
        "wrote {} events for {} users ({} spammers) to {}",
        events.len(),
        labels.len(),
        spammers,
        out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ train

fn load_corpus(cfg: &RunConfig) -> Result<(Vec<Event>, Corpus)> {
    let events_path = cfg
        .events
        .as_deref()
        .ok_or_else(|| usage("--events is required (or `events` in the config file)"))?;
    let labels_path = cfg
        .labels
        .as_deref()
        .ok_or_else(|| usage("--labels is required (or `labels` in the config file)"))?;

    let parsed = parse_events_path(events_path, cfg.relations, ',')
        .with_context(|| format!("reading events {}", events_path.display()))?;
    if !parsed.rejected.is_empty() {
        eprintln!(
            "warning: {} malformed event line(s) skipped, first at line {}",
            parsed.rejected.len(),
            parsed.rejected[0].line
        );
    }
    let labels = parse_labels_path(labels_path, ',')
        .with_context(|| format!("reading labels {}", labels_path.display()))?;
    if !labels.rejected.is_empty() {
        eprintln!(
            "warning: {} malformed label line(s) skipped, first at line {}",
            labels.rejected.len(),
            labels.rejected[0].line
        );
    }
    let corpus = build_sequences(&parsed.events, &labels.labels, cfg.relations)?;
    ensure!(!corpus.sequences.is_empty(), "no user sequences in the events file");
    Ok((parsed.events, corpus))
}

fn model_config(cfg: &RunConfig) -> MdmConfig {
    MdmConfig {
        stage: cfg.stage.into(),
        window_mode: cfg.window.into(),
        relation_sum: RelationSum::Distinct,
    }
}

pub fn train(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (_, corpus) = load_corpus(cfg)?;
    let hyper = MdmHyper {
        relation_count: cfg.relations,
        d: cfg.d,
        window_len: cfg.n,
        individual_layers: cfg.k,
        union_layers: cfg.l,
    };

    // One user seed drives the three seeded phases.
    let (pretrained, nll_trace) =
        train_embeddings(&corpus, cfg.d, cfg.pretrain_epochs, cfg.seed)?;
    let mut params = MdmParams::init(hyper, cfg.seed.wrapping_add(1))?;
    params.embed = pretrained;
    let mcfg = model_config(cfg);
    let tcfg = TrainConfig {
        epochs: cfg.epochs,
        batch_pairs: cfg.batch_pairs,
        learning_rate: cfg.learning_rate,
        lambda: cfg.lambda,
        seed: cfg.seed.wrapping_add(2),
        freeze_embed: cfg.freeze_embed,
        ..TrainConfig::default()
    };
    let trace = train_ranking(&corpus, &mut params, &mcfg, &tcfg)?;

    ensure_dir(out)?;
    let checkpoint = out.join("checkpoint.mdm");
    save_model(&params, &checkpoint)?;

    let mut report = String::from("phase,epoch,loss,penalty\n");
    for (i, nll) in nll_trace.iter().enumerate() {
        writeln!(report, "pretrain,{i},{nll},0").unwrap();
    }
    for e in &trace.epochs {
        writeln!(report, "ranking,{},{},{}", e.epoch, e.mean_pair_loss, e.penalty).unwrap();
    }
    write_file(&out.join("loss-trace.csv"), &report)?;
    cfg.echo_into(out)?;

    let last = trace.epochs.last();
    println!(
        "checkpoint {} after {} ranking epochs (mean pair loss {}{})",
        checkpoint.display(),
        trace.epochs.len(),
        last.map(|e| e.mean_pair_loss.to_string()).unwrap_or_else(|| "n/a".into()),
        if trace.stopped_early { ", stopped early" } else { "" }
    );
    Ok(())
}

// --------------------------------------------------------------- features

pub fn features(cfg: &RunConfig, out: &Path, which: &str) -> Result<()> {
    let (events, corpus) = load_corpus(cfg)?;

    let needs_model = matches!(which, "mdm" | "all");
    let loaded: Option<MdmParams> = if needs_model {
        let path = cfg.checkpoint.as_deref().ok_or_else(|| {
            usage(format!("--which {which} includes model features; --checkpoint is required"))
        })?;
        let params = load_model(path)
            .with_context(|| format!("loading checkpoint {}", path.display()))?;
        ensure!(
            params.hyper.relation_count == cfg.relations,
            "checkpoint was trained over {} relations but --relations is {}",
            params.hyper.relation_count,
            cfg.relations
        );
        Some(params)
    } else {
        None
    };
    let bundle = loaded.as_ref().map(|params| ModelBundle {
        params,
        cfg: model_config(cfg),
        mode: cfg.feature_mode.into(),
    });

    let extractor = build_extractor(which)?;
    let ctx = FeatureContext { corpus: &corpus, events: &events, model: bundle };
    let matrix = extractor.extract(&ctx)?;

    ensure_dir(out)?;
    let path = out.join(format!("features-{which}.csv"));
    matrix.write_to_path(&path)?;
    cfg.echo_into(out)?;
    println!(
        "wrote {} rows x {} feature columns to {}",
        matrix.rows.rows(),
        matrix.columns.len(),
        path.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- eval

pub fn eval(cfg: &RunConfig, out: &Path) -> Result<()> {
    let features_path = cfg
        .features
        .as_deref()
        .ok_or_else(|| usage("--features is required (or `features` in the config file)"))?;
    let labels_path = cfg
        .labels
        .as_deref()
        .ok_or_else(|| usage("--labels is required (or `labels` in the config file)"))?;
    ensure!(cfg.seeds > 0, "--seeds must be at least 1");

    let matrix = FeatureMatrix::read_from_path(features_path)?;
    let labels_file = parse_labels_path(labels_path, ',')?;
    let labels: Vec<Label> = matrix
        .user_ids
        .iter()
        .map(|id| {
            labels_file.labels.get(id).copied().ok_or_else(|| {
                anyhow::anyhow!("user {id} appears in the feature matrix but has no label")
            })
        })
        .collect::<Result<_>>()?;

    let name = features_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "features".into());
    let lr = LrConfig::default();
    let mut outcomes: Vec<EvalOutcome> = Vec::with_capacity(cfg.seeds);
    let mut report = String::from("features,seed,precision,recall,f_measure\n");
    for seed in 0..cfg.seeds as u64 {
        let o = evaluate_features(&matrix.rows, &labels, cfg.test_fraction, seed, &lr)?;
        writeln!(report, "{name},{seed},{},{},{}", o.precision, o.recall, o.f_measure)
            .unwrap();
        outcomes.push(o);
    }
    // population mean and deviation per metric, appended as summary rows
    let count = outcomes.len() as f64;
    let summarize = |values: Vec<f64>| {
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
        (mean, var.sqrt())
    };
    let (pm, ps) = summarize(outcomes.iter().map(|o| o.precision).collect());
    let (rm, rs) = summarize(outcomes.iter().map(|o| o.recall).collect());
    let (fm, fs) = summarize(outcomes.iter().map(|o| o.f_measure).collect());
    writeln!(report, "{name},mean,{pm},{rm},{fm}").unwrap();
    writeln!(report, "{name},std,{ps},{rs},{fs}").unwrap();

    ensure_dir(out)?;
    write_file(&out.join("report.csv"), &report)?;
    cfg.echo_into(out)?;
    print!("{report}");
    std::io::stdout().flush().ok();
    Ok(())
}

// ----------------------------------------------------------------- errors

/// Exit code for a failed run: 2 for invocation mistakes, 1 otherwise.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}
