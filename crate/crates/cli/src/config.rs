//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [corpus]
//! path = "corpus.jsonl"
//!
//! [sampler]
//! method = "crosspair"
//! negatives_per_article = 5
//!
//! [encoder]
//! kind = "hashed_test"
//! dimension = 32
//!
//! [model]
//! head = "fc_only"
//!
//! [output]
//! dir = "runs/demo"
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use refscore::corpus::DEFAULT_FRACTIONS;
use refscore::encoder::{EncoderKind, Unit, JOINT_BUDGET};
use refscore::metrics::{RougeVariant, STANDARD_VARIANTS};
use refscore::model::{HeadConfig, HeadKind, Loss, TrainConfig};
use refscore::sampler::{Method, RateDistribution, SamplerConfig};
use serde::{Deserialize, Serialize};

use crate::fail::{CliError, CliResult};

/// Variable naming a directory where precomputed encoder sidecars live.
pub const CACHE_ENV: &str = "REFSCORE_CACHE";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_fractions")]
    pub fractions: (f64, f64, f64),
    /// Uniform seeded subsample of this many documents.
    #[serde(default)]
    pub max_documents: Option<usize>,
    #[serde(default)]
    pub abbreviations: Option<PathBuf>,
}

fn default_fractions() -> (f64, f64, f64) {
    DEFAULT_FRACTIONS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "one")]
    pub negatives_per_article: usize,
    /// Negatives per article in the test set; defaults to
    /// `negatives_per_article`. Validation follows the training ratio so
    /// early stopping tracks the loss being optimized.
    #[serde(default)]
    pub eval_negatives_per_article: Option<usize>,
    #[serde(default = "default_rates")]
    pub rate_distribution: RateDistribution,
}

fn default_method() -> Method {
    Method::Crosspair
}

fn one() -> usize {
    1
}

fn default_rates() -> RateDistribution {
    SamplerConfig::default().rate_distribution
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            negatives_per_article: 1,
            eval_negatives_per_article: None,
            rate_distribution: default_rates(),
        }
    }
}

impl SamplerSection {
    pub fn training(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            negatives_per_article: self.negatives_per_article,
            rate_distribution: self.rate_distribution,
            seed,
        }
    }

    pub fn test(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            negatives_per_article: self.eval_negatives_per_article.unwrap_or(self.negatives_per_article),
            ..self.training(seed)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    #[serde(default = "default_kind")]
    pub kind: EncoderKind,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Hash seed of `hashed_test`; defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_unit")]
    pub unit: Unit,
    #[serde(default)]
    pub doc_limit: Option<usize>,
    #[serde(default)]
    pub summary_limit: Option<usize>,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    #[serde(default = "default_budget")]
    pub joint_budget: usize,
}

fn default_kind() -> EncoderKind {
    EncoderKind::HashedTest
}

fn default_dimension() -> usize {
    32
}

fn default_unit() -> Unit {
    Unit::Sentence
}

fn default_quantile() -> f64 {
    0.8
}

fn default_budget() -> usize {
    JOINT_BUDGET
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            dimension: default_dimension(),
            seed: None,
            path: None,
            unit: default_unit(),
            doc_limit: None,
            summary_limit: None,
            quantile: default_quantile(),
            joint_budget: default_budget(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_head")]
    pub head: HeadKind,
    #[serde(default)]
    pub fc_hidden: Option<usize>,
    #[serde(default)]
    pub cnn_filters: Option<usize>,
    #[serde(default)]
    pub cnn_kernel_rows: Option<usize>,
    #[serde(default)]
    pub lstm_units: Option<usize>,
    /// Defaults to `bce` for cross pairing and `mse` for mutations.
    #[serde(default)]
    pub loss: Option<Loss>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub early_stop_patience: Option<usize>,
    #[serde(default)]
    pub max_epochs: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
}

fn default_head() -> HeadKind {
    HeadKind::FcOnly
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            head: default_head(),
            fc_hidden: None,
            cnn_filters: None,
            cnn_kernel_rows: None,
            lstm_units: None,
            loss: None,
            learning_rate: None,
            rho: None,
            epsilon: None,
            early_stop_patience: None,
            max_epochs: None,
            batch_size: None,
        }
    }
}

impl ModelSection {
    pub fn head_config(&self, unit: Unit) -> HeadConfig {
        let base = HeadConfig::for_unit(self.head, unit);
        HeadConfig {
            kind: self.head,
            fc_hidden: self.fc_hidden.unwrap_or(base.fc_hidden),
            cnn_filters: self.cnn_filters.unwrap_or(base.cnn_filters),
            cnn_kernel_rows: self.cnn_kernel_rows.unwrap_or(base.cnn_kernel_rows),
            lstm_units: self.lstm_units.unwrap_or(base.lstm_units),
        }
    }

    pub fn train_config(&self, method: Method, seed: u64) -> TrainConfig {
        let loss = self
            .loss
            .unwrap_or(if method.is_binary() { Loss::Bce } else { Loss::Mse });
        let base = TrainConfig::new(loss, seed);
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            rho: self.rho.unwrap_or(base.rho),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            early_stop_patience: self.early_stop_patience.unwrap_or(base.early_stop_patience),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            ..base
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub human_scores: Option<PathBuf>,
    #[serde(default)]
    pub set_summaries: Option<PathBuf>,
    /// Adds ROUGE baseline rows to the alignment report.
    #[serde(default)]
    pub rouge_baseline: bool,
    #[serde(default = "default_variants")]
    pub rouge_variants: Vec<RougeVariant>,
    #[serde(default)]
    pub allow_partial: bool,
    #[serde(default)]
    pub exclude_summarizers: Vec<String>,
    /// Domains compared by `cross-domain`; defaults to every domain in the
    /// corpus.
    #[serde(default)]
    pub domains: Vec<String>,
}

fn default_variants() -> Vec<RougeVariant> {
    STANDARD_VARIANTS.to_vec()
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            human_scores: None,
            set_summaries: None,
            rouge_baseline: false,
            rouge_variants: default_variants(),
            allow_partial: false,
            exclude_summarizers: Vec::new(),
            domains: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base, std::env::var_os(CACHE_ENV).map(PathBuf::from).as_deref());
        Ok(cfg)
    }

    /// Makes paths absolute against `base`. Precomputed sidecars given as
    /// relative paths are looked up under `cache` instead when it is set.
    pub fn resolve(&mut self, base: &Path, cache: Option<&Path>) {
        let at = |p: &mut PathBuf, dir: &Path| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        at(&mut self.corpus.path, base);
        if let Some(p) = self.corpus.abbreviations.as_mut() {
            at(p, base);
        }
        if let Some(p) = self.encoder.path.as_mut() {
            match cache {
                Some(c) if self.encoder.kind == EncoderKind::Precomputed => at(p, c),
                _ => at(p, base),
            }
        }
        for p in [self.eval.human_scores.as_mut(), self.eval.set_summaries.as_mut()].into_iter().flatten() {
            at(p, base);
        }
        at(&mut self.output.dir, base);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::parse("seed = 3\n[corpus]\npath = \"c.jsonl\"\n").unwrap();
        assert_eq!(cfg.sampler.method, Method::Crosspair);
        assert_eq!(cfg.encoder.quantile, 0.8);
        assert_eq!(cfg.model.train_config(Method::Replace, 3).loss, Loss::Mse);
        assert_eq!(cfg.model.head_config(Unit::Word).lstm_units, 25);
    }

    #[test]
    fn unknown_keys_and_missing_seed_are_rejected() {
        assert!(RunConfig::parse("seed = 1\n[corpus]\npath = \"c\"\nfoo = 2\n").is_err());
        assert!(RunConfig::parse("[corpus]\npath = \"c\"\n").is_err());
        assert!(RunConfig::parse("seed = 1\n[corpus]\npath = \"c\"\n[model]\nhead = \"rnn\"\n").is_err());
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let mut cfg = RunConfig::parse(
            "seed = 1\n[corpus]\npath = \"c.jsonl\"\n[encoder]\nkind = \"precomputed\"\npath = \"side.jsonl\"\n",
        )
        .unwrap();
        cfg.resolve(Path::new("/cfg"), Some(Path::new("/cache")));
        assert_eq!(cfg.corpus.path, Path::new("/cfg/c.jsonl"));
        assert_eq!(cfg.encoder.path.unwrap(), Path::new("/cache/side.jsonl"));
        assert_eq!(cfg.output.dir, Path::new("/cfg/out"));
    }

    #[test]
    fn rouge_variants_parse_from_tables() {
        let cfg = RunConfig::parse(
            "seed = 1\n[corpus]\npath = \"c\"\n[eval]\nrouge_variants = [{ kind = \"n\", n = 1 }, { kind = \"w\", weight = 1.2 }]\n",
        )
        .unwrap();
        assert_eq!(cfg.eval.rouge_variants.len(), 2);
    }
}
