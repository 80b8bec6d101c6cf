//! Declarative run configuration. Defaults cover the best-performing model
//! sizing; an optional TOML document overrides the defaults and explicit
//! flags override the document. Every command echoes the fully resolved
//! configuration into its output directory so a run can be reproduced from
//! the artifacts alone.

use anyhow::{Context, Result};
use mdm_core::model::{FeatureMode, Stage, WindowMode};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WindowFlag {
    /// Recent window rows start at the newest state.
    IncludeCurrent,
    /// Recent window rows start one step back.
    LagOnly,
}

impl From<WindowFlag> for WindowMode {
    fn from(w: WindowFlag) -> Self {
        match w {
            WindowFlag::IncludeCurrent => WindowMode::IncludeCurrent,
            WindowFlag::LagOnly => WindowMode::LagOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureModeFlag {
    /// Score contributions collapsed over relations.
    Sum,
    /// One score-contribution block per relation.
    ConcatAll,
}

impl From<FeatureModeFlag> for FeatureMode {
    fn from(m: FeatureModeFlag) -> Self {
        match m {
            FeatureModeFlag::Sum => FeatureMode::Sum,
            FeatureModeFlag::ConcatAll => FeatureMode::ConcatAll,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StageFlag {
    /// Mean position encoding only.
    Representation,
    /// Add the recurrent long-term state.
    LongTerm,
    /// Add the windowed residual attention context.
    Individual,
    /// The whole pipeline including the union-level stack.
    Full,
}

impl From<StageFlag> for Stage {
    fn from(s: StageFlag) -> Self {
        match s {
            StageFlag::Representation => Stage::Representation,
            StageFlag::LongTerm => Stage::LongTerm,
            StageFlag::Individual => Stage::Individual,
            StageFlag::Full => Stage::Full,
        }
    }
}

/// The resolved configuration a command actually ran with. Serialized as
/// `effective-config.toml` next to the command's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    // corpus synthesis
    pub users: usize,
    pub spam: f64,
    pub mean_length: f64,
    // corpus shape
    pub relations: usize,
    // model sizing
    pub d: usize,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    // training
    pub lambda: f64,
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub batch_pairs: usize,
    pub learning_rate: f64,
    pub freeze_embed: bool,
    pub seed: u64,
    // extraction and evaluation
    pub window: WindowFlag,
    pub feature_mode: FeatureModeFlag,
    pub stage: StageFlag,
    pub seeds: usize,
    pub test_fraction: f64,
    // file inputs, when the command takes them
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub which: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            users: 1000,
            spam: 0.0445,
            mean_length: 21.0,
            relations: 7,
            d: 32,
            n: 6,
            k: 4,
            l: 4,
            lambda: 1e-4,
            epochs: 30,
            pretrain_epochs: 30,
            batch_pairs: 64,
            learning_rate: 1e-3,
            freeze_embed: false,
            seed: 7,
            window: WindowFlag::IncludeCurrent,
            feature_mode: FeatureModeFlag::Sum,
            stage: StageFlag::Full,
            seeds: 10,
            test_fraction: 0.2,
            events: None,
            labels: None,
            checkpoint: None,
            features: None,
            which: None,
        }
    }
}

/// The same document with every field optional: what a TOML config file may
/// specify. Unknown keys are tolerated so one document can drive the whole
/// pipeline.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct FileConfig {
    pub users: Option<usize>,
    pub spam: Option<f64>,
    pub mean_length: Option<f64>,
    pub relations: Option<usize>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub pretrain_epochs: Option<usize>,
    pub batch_pairs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub freeze_embed: Option<bool>,
    pub seed: Option<u64>,
    pub window: Option<WindowFlag>,
    pub feature_mode: Option<FeatureModeFlag>,
    pub stage: Option<StageFlag>,
    pub seeds: Option<usize>,
    pub test_fraction: Option<f64>,
    pub events: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub features: Option<PathBuf>,
}

impl RunConfig {
    pub fn overlay_file(&mut self, path: Option<&Path>) -> Result<()> {
        let Some(path) = path else { return Ok(()) };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: FileConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = file.$field { self.$field = v; })*
            };
        }
        take!(
            users, spam, mean_length, relations, d, n, k, l, lambda, epochs,
            pretrain_epochs, batch_pairs, learning_rate, freeze_embed, seed,
            window, feature_mode, stage, seeds, test_fraction,
        );
        macro_rules! take_path {
            ($($field:ident),* $(,)?) => {
                $(if file.$field.is_some() { self.$field = file.$field; })*
            };
        }
        take_path!(events, labels, checkpoint, features);
        Ok(())
    }

    /// Write the resolved document into `dir/effective-config.toml`.
    pub fn echo_into(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).context("serializing effective config")?;
        let path = dir.join("effective-config.toml");
        std::fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults_and_tolerates_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "d = 8\nwindow = \"lag-only\"\nnot_a_knob = 3\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.overlay_file(Some(&path)).unwrap();
        assert_eq!(cfg.d, 8);
        assert_eq!(cfg.window, WindowFlag::LagOnly);
        assert_eq!(cfg.n, 6);
    }

    #[test]
    fn echo_roundtrips_through_the_file_reader() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { d: 12, seed: 99, ..RunConfig::default() };
        cfg.echo_into(dir.path()).unwrap();
        let mut readback = RunConfig::default();
        readback.overlay_file(Some(&dir.path().join("effective-config.toml"))).unwrap();
        assert_eq!(readback.d, 12);
        assert_eq!(readback.seed, 99);
    }

    #[test]
    fn capital_l_is_the_toml_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "L = 2\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.overlay_file(Some(&path)).unwrap();
        assert_eq!(cfg.l, 2);
    }
}
