//! Feature extraction behind a common trait.
//!
//! Every extractor turns a corpus into one row of numbers per labeled user;
//! extractors are registered by name (`kgram`, `graph`, `mdm`, `all`) and
//! selected at runtime, so the classification protocol downstream never
//! cares which family produced its matrix.

use crate::baselines::graph::{relation_graphs, FEATURES_PER_RELATION, FEATURE_NAMES};
use crate::baselines::kgram::{bigram_features, bigram_width};
use crate::ingest::{Corpus, Event, Label, UserId};
use crate::model::{
    extract_features, feature_width, user_forward, FeatureMode, MdmConfig, MdmParams,
};
use crate::numerics::Tensor2;
use crate::{Error, Result};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

/// One row per user, aligned with `user_ids`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub user_ids: Vec<UserId>,
    pub columns: Vec<String>,
    pub rows: Tensor2,
}

impl FeatureMatrix {
    pub fn new(user_ids: Vec<UserId>, columns: Vec<String>, rows: Tensor2) -> Result<Self> {
        if rows.rows() != user_ids.len() || rows.cols() != columns.len() {
            return Err(Error::shape(format!(
                "feature matrix: {}x{} values for {} users and {} columns",
                rows.rows(),
                rows.cols(),
                user_ids.len(),
                columns.len()
            )));
        }
        Ok(FeatureMatrix { user_ids, columns, rows })
    }

    /// Glue two matrices over the same users side by side.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.user_ids != other.user_ids {
            return Err(Error::invalid("feature matrix: user sets differ, cannot join"));
        }
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        let mut rows = Tensor2::zeros(self.rows.rows(), columns.len());
        for r in 0..rows.rows() {
            let dst = rows.row_mut(r);
            dst[..self.columns.len()].copy_from_slice(self.rows.row(r));
            dst[self.columns.len()..].copy_from_slice(other.rows.row(r));
        }
        FeatureMatrix::new(self.user_ids.clone(), columns, rows)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        write!(w, "user_id")?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (i, &u) in self.user_ids.iter().enumerate() {
            write!(w, "{u}")?;
            for v in self.rows.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<FeatureMatrix> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::invalid("feature matrix: empty file"))?;
        let mut parts = header.split(',');
        if parts.next() != Some("user_id") {
            return Err(Error::invalid("feature matrix: header must start with user_id"));
        }
        let columns: Vec<String> = parts.map(str::to_string).collect();
        let mut user_ids = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let uid = parts
                .next()
                .unwrap()
                .parse::<UserId>()
                .map_err(|_| Error::Parse { line: idx + 2, msg: "bad user id".into() })?;
            let row: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: idx + 2, msg: "bad feature value".into() })?;
            if row.len() != columns.len() {
                return Err(Error::Parse {
                    line: idx + 2,
                    msg: format!("{} values, expected {}", row.len(), columns.len()),
                });
            }
            user_ids.push(uid);
            values.extend(row);
        }
        let rows = Tensor2::from_vec(user_ids.len(), columns.len(), values)?;
        FeatureMatrix::new(user_ids, columns, rows)
    }

    pub fn write_to_path(&self, path: &std::path::Path) -> Result<()> {
        self.write_to(&mut std::fs::File::create(path)?)
    }

    pub fn read_from_path(path: &std::path::Path) -> Result<FeatureMatrix> {
        FeatureMatrix::read_from(&mut std::fs::File::open(path)?)
    }
}

/// Sequence indices of the labeled users, in user-id order.
pub fn labeled_rows(corpus: &Corpus) -> Vec<usize> {
    corpus
        .sequences
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.label.is_some().then_some(i))
        .collect()
}

/// Labels aligned with [`labeled_rows`].
pub fn labels_of(corpus: &Corpus) -> Vec<Label> {
    corpus.sequences.iter().filter_map(|s| s.label).collect()
}

/// Everything an extractor may need; the model bundle is optional because
/// the baseline families run without one.
pub struct FeatureContext<'a> {
    pub corpus: &'a Corpus,
    pub events: &'a [Event],
    pub model: Option<ModelBundle<'a>>,
}

pub struct ModelBundle<'a> {
    pub params: &'a MdmParams,
    pub cfg: MdmConfig,
    pub mode: FeatureMode,
}

pub trait FeatureExtractor {
    fn name(&self) -> &'static str;
    fn extract(&self, ctx: &FeatureContext) -> Result<FeatureMatrix>;
}

pub struct KgramExtractor;

impl FeatureExtractor for KgramExtractor {
    fn name(&self) -> &'static str {
        "kgram"
    }

    fn extract(&self, ctx: &FeatureContext) -> Result<FeatureMatrix> {
        let m = ctx.corpus.relation_count;
        let mut columns = Vec::with_capacity(bigram_width(m));
        for a in 1..=m {
            for b in 1..=m {
                columns.push(format!("bigram_{a}_{b}"));
            }
        }
        let picked = labeled_rows(ctx.corpus);
        let mut rows = Tensor2::zeros(picked.len(), columns.len());
        let mut user_ids = Vec::with_capacity(picked.len());
        for (r, &i) in picked.iter().enumerate() {
            let seq = &ctx.corpus.sequences[i];
            rows.row_mut(r).copy_from_slice(&bigram_features(&seq.relations, m)?);
            user_ids.push(seq.user);
        }
        FeatureMatrix::new(user_ids, columns, rows)
    }
}

pub struct GraphExtractor;

impl FeatureExtractor for GraphExtractor {
    fn name(&self) -> &'static str {
        "graph"
    }

    fn extract(&self, ctx: &FeatureContext) -> Result<FeatureMatrix> {
        let m = ctx.corpus.relation_count;
        let graphs = relation_graphs(ctx.events, m)?;
        let per_graph: Vec<_> =
            graphs.iter().map(|g| g.features()).collect::<Result<_>>()?;
        let mut columns = Vec::with_capacity(m * FEATURES_PER_RELATION);
        for rel in 1..=m {
            for feat in FEATURE_NAMES {
                columns.push(format!("r{rel}_{feat}"));
            }
        }
        let picked = labeled_rows(ctx.corpus);
        let mut rows = Tensor2::zeros(picked.len(), columns.len());
        let mut user_ids = Vec::with_capacity(picked.len());
        for (r, &i) in picked.iter().enumerate() {
            let user = ctx.corpus.sequences[i].user;
            let dst = rows.row_mut(r);
            for (g, feats) in per_graph.iter().enumerate() {
                if let Some(block) = feats.get(&user) {
                    dst[g * FEATURES_PER_RELATION..(g + 1) * FEATURES_PER_RELATION]
                        .copy_from_slice(block);
                }
            }
            user_ids.push(user);
        }
        FeatureMatrix::new(user_ids, columns, rows)
    }
}

pub struct MdmExtractor;

impl FeatureExtractor for MdmExtractor {
    fn name(&self) -> &'static str {
        "mdm"
    }

    fn extract(&self, ctx: &FeatureContext) -> Result<FeatureMatrix> {
        let bundle = ctx
            .model
            .as_ref()
            .ok_or_else(|| Error::invalid("mdm features need a trained model checkpoint"))?;
        let width = feature_width(
            bundle.cfg.stage,
            bundle.mode,
            bundle.params.hyper.d,
            bundle.params.hyper.relation_count,
        );
        let columns: Vec<String> = (0..width).map(|i| format!("mdm_f_{i}")).collect();
        let picked = labeled_rows(ctx.corpus);
        let mut rows = Tensor2::zeros(picked.len(), width);
        let mut user_ids = Vec::with_capacity(picked.len());
        for (r, &i) in picked.iter().enumerate() {
            let seq = &ctx.corpus.sequences[i];
            let fwd = user_forward(&seq.relations, bundle.params, &bundle.cfg)?;
            let values = extract_features(&fwd, bundle.params, bundle.mode);
            if values.len() != width {
                return Err(Error::shape(format!(
                    "mdm features: user {} produced {} values, expected {width}",
                    seq.user,
                    values.len()
                )));
            }
            rows.row_mut(r).copy_from_slice(&values);
            user_ids.push(seq.user);
        }
        FeatureMatrix::new(user_ids, columns, rows)
    }
}

/// All three families side by side.
pub struct CombinedExtractor;

impl FeatureExtractor for CombinedExtractor {
    fn name(&self) -> &'static str {
        "all"
    }

    fn extract(&self, ctx: &FeatureContext) -> Result<FeatureMatrix> {
        KgramExtractor
            .extract(ctx)?
            .hstack(&GraphExtractor.extract(ctx)?)?
            .hstack(&MdmExtractor.extract(ctx)?)
    }
}

pub const EXTRACTOR_NAMES: [&str; 4] = ["kgram", "graph", "mdm", "all"];

/// Look an extractor up by its registered name.
pub fn build_extractor(name: &str) -> Result<Box<dyn FeatureExtractor>> {
    match name {
        "kgram" => Ok(Box::new(KgramExtractor)),
        "graph" => Ok(Box::new(GraphExtractor)),
        "mdm" => Ok(Box::new(MdmExtractor)),
        "all" => Ok(Box::new(CombinedExtractor)),
        other => Err(Error::invalid(format!(
            "unknown feature family {other:?}; available: {}",
            EXTRACTOR_NAMES.join(", ")
        ))),
    }
}
