//! Labeled training data from gold document/summary pairs.
//!
//! Two families of negatives:
//!
//! * **cross pairing**: a document paired with its own reference summary is
//!   labeled 1, paired with the reference summary of another document 0;
//! * **mutation**: a fraction of the reference summary's tokens is added,
//!   deleted or replaced, and the label is one minus the achieved fraction.
//!
//! For a summary of `m` tokens and requested fraction `f`, mutation touches
//! `k = round_half_up(f·m)` tokens and the label is `1 − k/m`. Add-mutation
//! also divides by the original length `m`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};
use crate::textproc::{tokenize, TokenSequence, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Crosspair,
    MutAdd,
    MutDelete,
    MutReplace,
}

impl Provenance {
    pub fn is_mutation(self) -> bool {
        matches!(self, Provenance::MutAdd | Provenance::MutDelete | Provenance::MutReplace)
    }
}

/// Which negatives a training set is built from. One method per model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Crosspair,
    Add,
    Delete,
    Replace,
}

impl Method {
    pub fn provenance(self) -> Provenance {
        match self {
            Method::Crosspair => Provenance::Crosspair,
            Method::Add => Provenance::MutAdd,
            Method::Delete => Provenance::MutDelete,
            Method::Replace => Provenance::MutReplace,
        }
    }

    /// Cross pairing gives binary labels, mutation gives graded ones.
    pub fn is_binary(self) -> bool {
        self == Method::Crosspair
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Crosspair => "crosspair",
            Method::Add => "add",
            Method::Delete => "delete",
            Method::Replace => "replace",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crosspair" => Ok(Method::Crosspair),
            "add" => Ok(Method::Add),
            "delete" => Ok(Method::Delete),
            "replace" => Ok(Method::Replace),
            _ => Err(Error::Config(format!(
                "unknown sampling method \"{s}\" (expected crosspair, add, delete or replace)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub doc_id: String,
    pub summary_tokens: TokenSequence,
    pub label: f64,
    pub provenance: Provenance,
    pub mutation_fraction: f64,
}

/// How mutation fractions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateDistribution {
    UniformContinuous,
    /// `{step, 2·step, …, 1 − step}`.
    UniformGrid { step: f64 },
}

impl RateDistribution {
    pub fn grid(&self) -> Option<Vec<f64>> {
        match *self {
            RateDistribution::UniformGrid { step } => {
                let n = (1.0 / step).round() as usize;
                Some((1..n).map(|i| i as f64 / n as f64).collect())
            }
            RateDistribution::UniformContinuous => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let RateDistribution::UniformGrid { step } = *self {
            let n = (1.0 / step).round();
            if !(step > 0.0 && step < 1.0) || ((n * step) - 1.0).abs() > 1e-9 || n < 2.0 {
                return Err(Error::Config(format!(
                    "grid step {step} must lie in (0, 1) and divide 1 evenly"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub negatives_per_article: usize,
    pub rate_distribution: RateDistribution,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            negatives_per_article: 1,
            rate_distribution: RateDistribution::UniformGrid { step: 0.1 },
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.negatives_per_article == 0 {
            return Err(Error::Config("negatives_per_article must be at least 1".into()));
        }
        self.rate_distribution.validate()
    }
}

// Absorbs representation error in products such as 0.15 * 10, so that exact
// halves round up as intended.
const ROUNDING_SLACK: f64 = 1e-9;

/// Number of tokens a mutation at `fraction` touches in a summary of `m`
/// tokens: `fraction·m` rounded half up.
pub fn mutation_count(fraction: f64, m: usize) -> usize {
    (fraction * m as f64 + 0.5 + ROUNDING_SLACK).floor() as usize
}

/// `1 − k/m`, the label for a summary of `m` tokens with `k` mutated.
pub fn label_for(k: usize, m: usize) -> f64 {
    1.0 - k as f64 / m as f64
}

fn check_fraction(fraction: f64, upper_inclusive: bool) -> Result<()> {
    let ok = fraction >= 0.0 && if upper_inclusive { fraction <= 1.0 } else { fraction < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("mutation fraction {fraction} out of range")))
    }
}

fn renamed(summary: &TokenSequence, tokens: Vec<String>, tag: &str) -> TokenSequence {
    TokenSequence::new(tokens, format!("{}#{tag}", summary.source_id))
}

/// Inserts `k = round(fraction·m)` vocabulary tokens at uniformly random
/// positions. Returns the new sequence and `k/m`.
pub fn mutate_add(
    summary: &TokenSequence,
    fraction: f64,
    vocab: &Vocabulary,
    rng: &mut Rng,
) -> Result<(TokenSequence, f64)> {
    check_fraction(fraction, true)?;
    let m = summary.len();
    if m == 0 {
        return Err(Error::DegenerateInput(format!("summary \"{}\" is empty", summary.source_id)));
    }
    if vocab.is_empty() {
        return Err(Error::InsufficientData("vocabulary is empty".into()));
    }
    let k = mutation_count(fraction, m);
    let total = m + k;
    let mut inserted = vec![false; total];
    for i in index::sample(rng, total, k) {
        inserted[i] = true;
    }
    let mut originals = summary.tokens.iter();
    let tokens = inserted
        .into_iter()
        .map(|new| {
            if new {
                vocab.tokens().choose(rng).expect("vocabulary is non-empty").clone()
            } else {
                originals.next().expect("m original slots").clone()
            }
        })
        .collect();
    Ok((renamed(summary, tokens, "add"), k as f64 / m as f64))
}

/// Deletes `k = round(fraction·m)` distinct positions. Deleting every token
/// is rejected.
pub fn mutate_delete(summary: &TokenSequence, fraction: f64, rng: &mut Rng) -> Result<(TokenSequence, f64)> {
    check_fraction(fraction, false)?;
    let m = summary.len();
    let k = mutation_count(fraction, m);
    if m == 0 || k >= m {
        return Err(Error::DegenerateInput(format!(
            "deleting {k} of {m} tokens would empty summary \"{}\"",
            summary.source_id
        )));
    }
    let mut drop = vec![false; m];
    for i in index::sample(rng, m, k) {
        drop[i] = true;
    }
    let tokens = summary
        .tokens
        .iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(t, _)| t.clone())
        .collect();
    Ok((renamed(summary, tokens, "delete"), k as f64 / m as f64))
}

/// Replaces `k = round(fraction·m)` distinct positions with vocabulary tokens
/// that differ from the token they replace.
pub fn mutate_replace(
    summary: &TokenSequence,
    fraction: f64,
    vocab: &Vocabulary,
    rng: &mut Rng,
) -> Result<(TokenSequence, f64)> {
    check_fraction(fraction, true)?;
    let m = summary.len();
    if m == 0 {
        return Err(Error::DegenerateInput(format!("summary \"{}\" is empty", summary.source_id)));
    }
    let k = mutation_count(fraction, m);
    let words = vocab.tokens();
    let mut tokens = summary.tokens.clone();
    let mut positions: Vec<usize> = index::sample(rng, m, k).into_vec();
    positions.sort_unstable();
    for p in positions {
        let original = &summary.tokens[p];
        let excluded = words.binary_search(original).ok();
        let choices = words.len() - usize::from(excluded.is_some());
        if choices == 0 {
            return Err(Error::CannotReplace(original.clone()));
        }
        let mut pick = rng.random_range(0..choices);
        if let Some(x) = excluded {
            if pick >= x {
                pick += 1;
            }
        }
        tokens[p] = words[pick].clone();
    }
    Ok((renamed(summary, tokens, "replace"), k as f64 / m as f64))
}

/// Gold summary tokens for every document in `doc_ids` that has one, sorted
/// by doc id.
fn gold_pairs(corpus: &Corpus, doc_ids: &[String]) -> Result<Vec<(String, TokenSequence)>> {
    let mut ids: Vec<&String> = doc_ids.iter().collect();
    ids.sort();
    ids.dedup();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        corpus.require_document(id)?;
        if let Some(s) = corpus.reference_for(id) {
            out.push((id.clone(), TokenSequence::from_text(&s.text, s.summary_id.clone())));
        }
    }
    Ok(out)
}

fn original(doc_id: &str, gold: &TokenSequence) -> LabeledSample {
    LabeledSample {
        doc_id: doc_id.to_string(),
        summary_tokens: gold.clone(),
        label: 1.0,
        provenance: Provenance::Original,
        mutation_fraction: 0.0,
    }
}

fn crosspair_for(
    index_of_doc: usize,
    gold: &[(String, TokenSequence)],
    config: &SamplerConfig,
) -> Result<Vec<LabeledSample>> {
    let (doc_id, own) = &gold[index_of_doc];
    let candidates: Vec<usize> = (0..gold.len())
        .filter(|&j| j != index_of_doc && gold[j].1.tokens != own.tokens)
        .collect();
    let k = config.negatives_per_article;
    if candidates.len() < k {
        return Err(Error::InsufficientData(format!(
            "document \"{doc_id}\" needs {k} negatives but only {} other summaries are available",
            candidates.len()
        )));
    }
    let mut rng = seeded(derive_seed(config.seed, doc_id));
    let mut out = vec![original(doc_id, own)];
    for pick in index::sample(&mut rng, candidates.len(), k) {
        out.push(LabeledSample {
            doc_id: doc_id.clone(),
            summary_tokens: gold[candidates[pick]].1.clone(),
            label: 0.0,
            provenance: Provenance::Crosspair,
            mutation_fraction: 0.0,
        });
    }
    Ok(out)
}

/// One positive and `negatives_per_article` negatives per document, the
/// negatives being reference summaries of distinct other documents in
/// `doc_ids`. Output is grouped by document in doc-id order.
pub fn cross_pair(corpus: &Corpus, doc_ids: &[String], config: &SamplerConfig) -> Result<Vec<LabeledSample>> {
    config.validate()?;
    let gold = gold_pairs(corpus, doc_ids)?;
    if gold.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "cross pairing needs at least 2 documents with reference summaries, got {}",
            gold.len()
        )));
    }
    let mut out = Vec::with_capacity(gold.len() * (config.negatives_per_article + 1));
    for i in 0..gold.len() {
        out.extend(crosspair_for(i, &gold, config)?);
    }
    Ok(out)
}

fn draw_fraction(dist: &RateDistribution, grid_order: &[f64], i: usize, m: usize, method: Method, rng: &mut Rng) -> f64 {
    match dist {
        RateDistribution::UniformGrid { .. } => grid_order[i % grid_order.len()],
        RateDistribution::UniformContinuous => {
            // Keep deletion strictly below an empty summary.
            let upper = if method == Method::Delete {
                (m as f64 - 0.5) / m as f64 - ROUNDING_SLACK
            } else {
                1.0
            };
            rng.random::<f64>() * upper
        }
    }
}

fn mutations_for(
    doc_id: &str,
    gold: &TokenSequence,
    method: Method,
    vocab: &Vocabulary,
    config: &SamplerConfig,
) -> Result<Vec<LabeledSample>> {
    let mut rng = seeded(derive_seed(config.seed, doc_id));
    let mut grid = config.rate_distribution.grid().unwrap_or_default();
    grid.shuffle(&mut rng);
    let mut out = vec![original(doc_id, gold)];
    for i in 0..config.negatives_per_article {
        let f = draw_fraction(&config.rate_distribution, &grid, i, gold.len(), method, &mut rng);
        let (tokens, achieved) = match method {
            Method::Add => mutate_add(gold, f, vocab, &mut rng),
            Method::Delete => mutate_delete(gold, f, &mut rng),
            Method::Replace => mutate_replace(gold, f, vocab, &mut rng),
            Method::Crosspair => unreachable!("cross pairing is not a mutation"),
        }
        .map_err(|e| match e {
            Error::DegenerateInput(msg) => Error::DegenerateInput(format!("document \"{doc_id}\": {msg}")),
            other => other,
        })?;
        out.push(LabeledSample {
            doc_id: doc_id.to_string(),
            summary_tokens: tokens,
            label: 1.0 - achieved,
            provenance: method.provenance(),
            mutation_fraction: achieved,
        });
    }
    Ok(out)
}

/// Training samples for one method over the documents in `doc_ids`: per
/// article the untouched gold summary (label 1) plus `negatives_per_article`
/// negatives, shuffled with the config seed.
///
/// Each article draws from its own stream seeded by `(seed, doc_id)`, so the
/// result does not depend on the order of `doc_ids`. Grid fractions are dealt
/// from a per-article shuffle of the grid, giving every article the full
/// spread of labels when `negatives_per_article` equals the grid size.
pub fn build_training_set(
    corpus: &Corpus,
    doc_ids: &[String],
    method: Method,
    vocab: &Vocabulary,
    config: &SamplerConfig,
) -> Result<Vec<LabeledSample>> {
    config.validate()?;
    let mut samples = match method {
        Method::Crosspair => cross_pair(corpus, doc_ids, config)?,
        _ => {
            let gold = gold_pairs(corpus, doc_ids)?;
            if gold.is_empty() {
                return Err(Error::InsufficientData("no reference summaries in the selected documents".into()));
            }
            let mut out = Vec::with_capacity(gold.len() * (config.negatives_per_article + 1));
            for (doc_id, g) in &gold {
                out.extend(mutations_for(doc_id, g, method, vocab, config)?);
            }
            out
        }
    };
    samples.shuffle(&mut seeded(config.seed));
    Ok(samples)
}

/// Count of samples per label value, keyed by the label printed with six
/// decimals so the map serializes deterministically.
pub fn label_histogram(samples: &[LabeledSample]) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for s in samples {
        *h.entry(format!("{:.6}", s.label)).or_insert(0) += 1;
    }
    h
}

#[derive(Serialize, Deserialize)]
struct SampleLine {
    doc_id: String,
    summary: String,
    label: f64,
    provenance: Provenance,
    mutation_fraction: f64,
}

/// Writes samples as JSONL:
/// `{"doc_id":…,"summary":"<token-joined text>","label":…,"provenance":…,"mutation_fraction":…}`.
pub fn write_samples(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        let line = SampleLine {
            doc_id: s.doc_id.clone(),
            summary: s.summary_tokens.joined(),
            label: s.label,
            provenance: s.provenance,
            mutation_fraction: s.mutation_fraction,
        };
        let json = serde_json::to_string(&line).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_samples(path: &Path) -> Result<Vec<LabeledSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: SampleLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&s.label) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("label {} outside [0, 1]", s.label),
            });
        }
        let source = format!("{}#{}", s.doc_id, i + 1);
        out.push(LabeledSample {
            summary_tokens: TokenSequence::new(tokenize(&s.summary), source),
            doc_id: s.doc_id,
            label: s.label,
            provenance: s.provenance,
            mutation_fraction: s.mutation_fraction,
        });
    }
    Ok(out)
}

/// Ids of documents that appear in `samples`.
pub fn sample_doc_ids(samples: &[LabeledSample]) -> HashSet<&str> {
    samples.iter().map(|s| s.doc_id.as_str()).collect()
}
