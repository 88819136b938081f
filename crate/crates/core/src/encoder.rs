//! Turning a (document, summary) pair into the vector the scoring head sees.
//!
//! Two schemes are supported:
//!
//! * **sequence**: one embedding per sentence (or per word) of the document,
//!   then one per sentence (word) of the summary, each side truncated or
//!   zero-padded to a fixed number of rows;
//! * **joint**: document and summary tokens packed into a single sequence
//!   `[CLS] doc… [SEP] summary… [SEP] [PAD]…` of exactly `joint_budget`
//!   positions, encoded by an external pair encoder that returns the vector
//!   at the classification position.
//!
//! Heavy neural encoders are not part of this crate. They plug in through
//! [`SentenceEncoder`] / [`JointEncoder`], or run offline and hand over their
//! output as a precomputed sidecar file.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, DocumentRecord};
use crate::error::{Error, Result};
use crate::rng::{stable_hash, SplitMix};
use crate::textproc::{split_token_sentences, tokenize, TokenSequence};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD: &str = "[PAD]";
/// `[CLS]` plus two `[SEP]`.
pub const CONTROL_TOKENS: usize = 3;

/// Sentence-level limits used when nothing is measured from data.
pub const SENTENCE_LIMITS: (usize, usize) = (47, 3);
/// Word-level limits used for word-embedding tables.
pub const WORD_LIMITS: (usize, usize) = (1091, 55);
pub const JOINT_BUDGET: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Sentence,
    Word,
    JointToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddingPolicy {
    pub unit: Unit,
    pub doc_limit: usize,
    pub summary_limit: usize,
    /// Total positions of a joint sequence, control tokens included.
    pub joint_budget: usize,
}

impl PaddingPolicy {
    pub fn sentence(doc_limit: usize, summary_limit: usize) -> Self {
        Self {
            unit: Unit::Sentence,
            doc_limit,
            summary_limit,
            joint_budget: JOINT_BUDGET,
        }
    }

    pub fn word(doc_limit: usize, summary_limit: usize) -> Self {
        Self {
            unit: Unit::Word,
            doc_limit,
            summary_limit,
            joint_budget: JOINT_BUDGET,
        }
    }

    pub fn joint(budget: usize) -> Self {
        Self {
            unit: Unit::JointToken,
            doc_limit: 1,
            summary_limit: 1,
            joint_budget: budget,
        }
    }

    pub fn rows(&self) -> usize {
        match self.unit {
            Unit::JointToken => 1,
            _ => self.doc_limit + self.summary_limit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_limit == 0 || self.summary_limit == 0 {
            return Err(Error::Config("padding limits must be at least 1".into()));
        }
        if self.unit == Unit::JointToken && self.joint_budget <= CONTROL_TOKENS {
            return Err(Error::Config(format!(
                "joint budget {} leaves no room after {CONTROL_TOKENS} control tokens",
                self.joint_budget
            )));
        }
        Ok(())
    }
}

/// Smallest value covering at least `quantile` of `lengths`.
fn covering_length(mut lengths: Vec<usize>, quantile: f64) -> usize {
    lengths.sort_unstable();
    let rank = (quantile * lengths.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    lengths[rank.min(lengths.len()) - 1].max(1)
}

/// Measures document and reference-summary lengths (in `unit`s) and picks
/// the smallest limits that cover `quantile` of each.
pub fn compute_padding_limits(corpus: &Corpus, quantile: f64, unit: Unit) -> Result<PaddingPolicy> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Config(format!("quantile {quantile} must lie in (0, 1)")));
    }
    if corpus.is_empty() {
        return Err(Error::InsufficientData("cannot measure lengths of an empty corpus".into()));
    }
    let measure = |text: &str, sentences: &[String]| match unit {
        Unit::Sentence => sentences.len(),
        Unit::Word | Unit::JointToken => tokenize(text).len(),
    };
    let docs: Vec<usize> = corpus.documents().iter().map(|d| measure(&d.text, &d.sentences)).collect();
    let sums: Vec<usize> = corpus.reference_summaries().map(|s| measure(&s.text, &s.sentences)).collect();
    if sums.is_empty() {
        return Err(Error::InsufficientData("corpus has no reference summaries".into()));
    }
    let (doc_limit, summary_limit) = (covering_length(docs, quantile), covering_length(sums, quantile));
    Ok(match unit {
        Unit::Sentence => PaddingPolicy::sentence(doc_limit, summary_limit),
        Unit::Word => PaddingPolicy::word(doc_limit, summary_limit),
        Unit::JointToken => PaddingPolicy {
            doc_limit,
            summary_limit,
            ..PaddingPolicy::joint(JOINT_BUDGET)
        },
    })
}

/// Padded row-major embedding matrix: `doc_rows` document rows followed by
/// `summary_rows` summary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub data: Vec<f64>,
    pub dim: usize,
    pub mask: Vec<bool>,
    pub doc_rows: usize,
    pub summary_rows: usize,
}

impl EmbeddingSequence {
    pub fn rows(&self) -> usize {
        self.doc_rows + self.summary_rows
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointEncoding {
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoding {
    Sequence(EmbeddingSequence),
    Joint(JointEncoding),
}

impl Encoding {
    /// `(rows, cols, row-major data)` as consumed by the heads.
    pub fn as_matrix(&self) -> (usize, usize, &[f64]) {
        match self {
            Encoding::Sequence(s) => (s.rows(), s.dim, &s.data),
            Encoding::Joint(j) => (1, j.vector.len(), &j.vector),
        }
    }

    pub fn into_data(self) -> Vec<f64> {
        match self {
            Encoding::Sequence(s) => s.data,
            Encoding::Joint(j) => j.vector,
        }
    }
}

/// An in-process sentence encoder (for example a wrapper around a neural
/// model). Implementations must return vectors of `dimension()` entries.
pub trait SentenceEncoder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, sentence: &str) -> Result<Vec<f64>>;
}

/// The packed pair handed to a [`JointEncoder`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointInput {
    /// Exactly `joint_budget` tokens, control and padding tokens included.
    pub tokens: Vec<String>,
    /// 0 for `[CLS]`, document tokens and the first `[SEP]`; 1 afterwards.
    pub segments: Vec<u8>,
    /// False on padding positions.
    pub attention: Vec<bool>,
    pub doc_tokens: usize,
    pub summary_tokens: usize,
}

/// An in-process pair encoder returning the classification-position vector.
pub trait JointEncoder: Send + Sync {
    fn dimension(&self) -> usize;
    fn encode(&self, input: &JointInput) -> Result<Vec<f64>>;
    /// Whether the encoder weights are updated during training. The heads in
    /// this crate never update them; adapters that do must say so.
    fn fine_tuned(&self) -> bool {
        false
    }
}

/// How many document and summary tokens survive packing into `budget`
/// positions, and how many padding positions follow.
///
/// Under budget nothing is cut. Over budget both sides shrink by the same
/// factor: the document keeps `floor(avail·doc/(doc+summary))` tokens and the
/// summary takes the rest, where `avail = budget − 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointLayout {
    pub doc_keep: usize,
    pub summary_keep: usize,
    pub padding: usize,
}

pub fn fit_joint_budget(doc_len: usize, summary_len: usize, budget: usize) -> Result<JointLayout> {
    let avail = budget
        .checked_sub(CONTROL_TOKENS)
        .filter(|a| *a > 0)
        .ok_or_else(|| Error::Config(format!("joint budget {budget} too small")))?;
    let total = doc_len + summary_len;
    if total <= avail {
        return Ok(JointLayout {
            doc_keep: doc_len,
            summary_keep: summary_len,
            padding: avail - total,
        });
    }
    let doc_keep = ((avail as u128 * doc_len as u128) / total as u128) as usize;
    Ok(JointLayout {
        doc_keep,
        summary_keep: avail - doc_keep,
        padding: 0,
    })
}

pub fn pack_joint(doc_tokens: &[String], summary_tokens: &[String], budget: usize) -> Result<JointInput> {
    let layout = fit_joint_budget(doc_tokens.len(), summary_tokens.len(), budget)?;
    let mut tokens = Vec::with_capacity(budget);
    let mut segments = Vec::with_capacity(budget);
    tokens.push(CLS.to_string());
    tokens.extend(doc_tokens[..layout.doc_keep].iter().cloned());
    tokens.push(SEP.to_string());
    segments.resize(tokens.len(), 0);
    tokens.extend(summary_tokens[..layout.summary_keep].iter().cloned());
    tokens.push(SEP.to_string());
    segments.resize(tokens.len(), 1);
    let real = tokens.len();
    tokens.resize(budget, PAD.to_string());
    segments.resize(budget, 1);
    let attention = (0..budget).map(|i| i < real).collect();
    Ok(JointInput {
        tokens,
        segments,
        attention,
        doc_tokens: layout.doc_keep,
        summary_tokens: layout.summary_keep,
    })
}

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

fn is_stopword(lower: &str) -> bool {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
        .contains(lower)
}

/// Dependency-free stand-in for a sentence encoder: each lowercased token is
/// hashed to a seeded pseudo-random vector in `[-1, 1)^d`, vectors are
/// averaged over the sentence and the mean is scaled to unit length.
///
/// Punctuation and words on a bundled stopword list are left out of the
/// average unless nothing else remains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl HashedEncoder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut g = SplitMix::new(stable_hash(self.seed, token.to_lowercase().as_bytes()));
        (0..self.dim).map(|_| g.next_signed_unit()).collect()
    }

    pub fn embed_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        let content: Vec<&String> = lowered
            .iter()
            .filter(|t| t.chars().any(char::is_alphanumeric) && !is_stopword(t))
            .collect();
        let kept = if content.is_empty() { lowered.iter().collect() } else { content };
        let mut acc = vec![0.0; self.dim];
        for t in kept {
            for (a, v) in acc.iter_mut().zip(self.token_vector(t)) {
                *a += v;
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            acc.iter_mut().for_each(|v| *v /= norm);
        }
        acc
    }
}

impl SentenceEncoder for HashedEncoder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, sentence: &str) -> Result<Vec<f64>> {
        Ok(self.embed_tokens(&tokenize(sentence)))
    }
}

/// Word vectors read from a `token v1 … vd` text table.
#[derive(Debug, Clone, PartialEq)]
pub struct WordTable {
    pub dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let v = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("word table line {}: {e}", i + 1)))?;
            match dim {
                None if v.is_empty() => {
                    return Err(Error::Format(format!("word table line {}: no vector values", i + 1)))
                }
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::Format(format!(
                        "word table line {}: expected {d} values, found {}",
                        i + 1,
                        v.len()
                    )))
                }
                _ => {}
            }
            vectors.insert(token.to_string(), v);
        }
        let dim = dim.ok_or_else(|| Error::Format("word table is empty".into()))?;
        Ok(Self { dim, vectors })
    }

    /// Out-of-vocabulary tokens map to the zero vector.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        self.vectors.get(token).cloned().unwrap_or_else(|| vec![0.0; self.dim])
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn doc_key(doc_id: &str) -> String {
    format!("doc:{doc_id}")
}

fn summary_digest(summary: &TokenSequence) -> String {
    hex::encode(Sha256::digest(summary.joined().as_bytes()))
}

/// Sidecar key of a summary: `sum:` + SHA-256 hex of its space-joined tokens.
pub fn summary_key(summary: &TokenSequence) -> String {
    format!("sum:{}", summary_digest(summary))
}

pub fn pair_key(doc_id: &str, summary: &TokenSequence) -> String {
    format!("pair:{doc_id}:{}", summary_digest(summary))
}

/// Embeddings produced offline by an external encoder.
///
/// JSONL, one entry per line: `{"key":…,"vectors":[[…],…]}` for per-sentence
/// rows of a document (`doc:<id>`) or summary (`sum:<sha256>`), or
/// `{"key":…,"vector":[…]}` for a joint pair vector (`pair:<id>:<sha256>`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    pub dim: usize,
    pub sequences: HashMap<String, Vec<Vec<f64>>>,
    pub joints: HashMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SidecarLine {
    key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<f64>>,
}

impl Sidecar {
    fn check_dim(&mut self, len: usize, key: &str) -> Result<()> {
        if self.dim == 0 {
            self.dim = len;
        }
        if len != self.dim || len == 0 {
            return Err(Error::Format(format!(
                "sidecar entry \"{key}\" has {len} values, expected {}",
                self.dim
            )));
        }
        Ok(())
    }

    pub fn insert_sequence(&mut self, key: String, rows: Vec<Vec<f64>>) -> Result<()> {
        for r in &rows {
            self.check_dim(r.len(), &key)?;
        }
        self.sequences.insert(key, rows);
        Ok(())
    }

    pub fn insert_joint(&mut self, key: String, vector: Vec<f64>) -> Result<()> {
        self.check_dim(vector.len(), &key)?;
        self.joints.insert(key, vector);
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut out = Sidecar::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: SidecarLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match (entry.vectors, entry.vector) {
                (Some(rows), None) => out.insert_sequence(entry.key, rows)?,
                (None, Some(v)) => out.insert_joint(entry.key, v)?,
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "entry needs exactly one of \"vectors\" or \"vector\"".into(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Writes entries sorted by key, sequences first.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut seq: Vec<_> = self.sequences.iter().collect();
        seq.sort_by(|a, b| a.0.cmp(b.0));
        let mut joint: Vec<_> = self.joints.iter().collect();
        joint.sort_by(|a, b| a.0.cmp(b.0));
        let lines = seq
            .into_iter()
            .map(|(k, v)| SidecarLine {
                key: k.clone(),
                vectors: Some(v.clone()),
                vector: None,
            })
            .chain(joint.into_iter().map(|(k, v)| SidecarLine {
                key: k.clone(),
                vectors: None,
                vector: Some(v.clone()),
            }));
        for l in lines {
            let json = serde_json::to_string(&l).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn sequence(&self, key: &str) -> Result<&[Vec<f64>]> {
        self.sequences
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbedding(key.to_string()))
    }

    fn joint(&self, key: &str) -> Result<&[f64]> {
        self.joints
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbedding(key.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    WordTable,
    HashedTest,
    Precomputed,
    ExternalSentence,
    ExternalJoint,
}

/// Everything needed to recreate a binding; stored inside model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub dimension: usize,
    pub policy: PaddingPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub fine_tuned: bool,
}

impl EncoderSpec {
    pub fn identity(&self) -> String {
        let p = &self.policy;
        let shape = match p.unit {
            Unit::JointToken => format!("joint/{}", p.joint_budget),
            Unit::Sentence => format!("sentence/{}+{}", p.doc_limit, p.summary_limit),
            Unit::Word => format!("word/{}+{}", p.doc_limit, p.summary_limit),
        };
        let source = match self.kind {
            EncoderKind::HashedTest => format!("hashed_test(seed={})", self.seed.unwrap_or(0)),
            EncoderKind::WordTable => format!("word_table({})", display_path(&self.path)),
            EncoderKind::Precomputed => format!("precomputed({})", display_path(&self.path)),
            EncoderKind::ExternalSentence => {
                format!("external_sentence({})", self.name.as_deref().unwrap_or("?"))
            }
            EncoderKind::ExternalJoint => format!(
                "external_joint({},{})",
                self.name.as_deref().unwrap_or("?"),
                if self.fine_tuned { "fine-tuned" } else { "frozen" }
            ),
        };
        format!("{source}:d={}:{shape}", self.dimension)
    }

    fn check_unit(&self) -> Result<()> {
        let ok = match self.kind {
            EncoderKind::HashedTest => matches!(self.policy.unit, Unit::Sentence | Unit::Word),
            EncoderKind::WordTable => self.policy.unit == Unit::Word,
            EncoderKind::Precomputed => matches!(self.policy.unit, Unit::Sentence | Unit::JointToken),
            EncoderKind::ExternalSentence => self.policy.unit == Unit::Sentence,
            EncoderKind::ExternalJoint => self.policy.unit == Unit::JointToken,
        };
        if !ok {
            return Err(Error::Config(format!(
                "{:?} encoder cannot produce {:?} units",
                self.kind, self.policy.unit
            )));
        }
        if self.dimension == 0 {
            return Err(Error::Config("encoder dimension must be positive".into()));
        }
        self.policy.validate()
    }
}

fn display_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

#[derive(Clone)]
enum Backend {
    Hashed(HashedEncoder),
    WordTable(Arc<WordTable>),
    Precomputed(Arc<Sidecar>),
    Sentence(Arc<dyn SentenceEncoder>),
    Joint(Arc<dyn JointEncoder>),
    Unavailable(String),
}

/// A configured encoder together with its padding policy.
#[derive(Clone)]
pub struct EncoderBinding {
    spec: EncoderSpec,
    backend: Backend,
}

impl fmt::Debug for EncoderBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EncoderBinding")
            .field("identity", &self.identity())
            .field("available", &self.is_available())
            .finish()
    }
}

impl EncoderBinding {
    pub fn hashed(dim: usize, seed: u64, policy: PaddingPolicy) -> Result<Self> {
        let spec = EncoderSpec {
            kind: EncoderKind::HashedTest,
            dimension: dim,
            policy,
            seed: Some(seed),
            path: None,
            name: None,
            fine_tuned: false,
        };
        spec.check_unit()?;
        Ok(Self {
            spec,
            backend: Backend::Hashed(HashedEncoder::new(dim, seed)),
        })
    }

    pub fn external_sentence(name: &str, encoder: Arc<dyn SentenceEncoder>, policy: PaddingPolicy) -> Result<Self> {
        let spec = EncoderSpec {
            kind: EncoderKind::ExternalSentence,
            dimension: encoder.dimension(),
            policy,
            seed: None,
            path: None,
            name: Some(name.to_string()),
            fine_tuned: false,
        };
        spec.check_unit()?;
        Ok(Self {
            spec,
            backend: Backend::Sentence(encoder),
        })
    }

    pub fn external_joint(name: &str, encoder: Arc<dyn JointEncoder>, policy: PaddingPolicy) -> Result<Self> {
        let spec = EncoderSpec {
            kind: EncoderKind::ExternalJoint,
            dimension: encoder.dimension(),
            policy,
            seed: None,
            path: None,
            name: Some(name.to_string()),
            fine_tuned: encoder.fine_tuned(),
        };
        spec.check_unit()?;
        Ok(Self {
            spec,
            backend: Backend::Joint(encoder),
        })
    }

    /// Recreates a binding from its spec. Encoders that cannot be rebuilt
    /// (missing files, in-process adapters) yield a binding whose `encode`
    /// fails with [`Error::EncoderUnavailable`]; attach the adapter again with
    /// [`EncoderBinding::attach_sentence`] or [`EncoderBinding::attach_joint`].
    pub fn from_spec(spec: EncoderSpec) -> Self {
        let backend = match spec.kind {
            EncoderKind::HashedTest => Backend::Hashed(HashedEncoder::new(spec.dimension, spec.seed.unwrap_or(0))),
            EncoderKind::WordTable | EncoderKind::Precomputed => {
                let path = spec.path.clone().unwrap_or_default();
                let loaded = if spec.kind == EncoderKind::WordTable {
                    load_word_table(&path).map(|b| b.backend)
                } else {
                    load_precomputed(&path).map(|b| b.backend)
                };
                loaded.unwrap_or_else(|e| Backend::Unavailable(e.to_string()))
            }
            EncoderKind::ExternalSentence | EncoderKind::ExternalJoint => {
                Backend::Unavailable("in-process adapter not attached".into())
            }
        };
        Self { spec, backend }
    }

    pub fn attach_sentence(&mut self, encoder: Arc<dyn SentenceEncoder>) -> Result<()> {
        if self.spec.kind != EncoderKind::ExternalSentence || encoder.dimension() != self.spec.dimension {
            return Err(Error::Config(format!("adapter does not match {}", self.identity())));
        }
        self.backend = Backend::Sentence(encoder);
        Ok(())
    }

    pub fn attach_joint(&mut self, encoder: Arc<dyn JointEncoder>) -> Result<()> {
        if self.spec.kind != EncoderKind::ExternalJoint || encoder.dimension() != self.spec.dimension {
            return Err(Error::Config(format!("adapter does not match {}", self.identity())));
        }
        self.backend = Backend::Joint(encoder);
        Ok(())
    }

    pub fn with_policy(mut self, policy: PaddingPolicy) -> Result<Self> {
        self.spec.policy = policy;
        self.spec.check_unit()?;
        Ok(self)
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn kind(&self) -> EncoderKind {
        self.spec.kind
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn policy(&self) -> &PaddingPolicy {
        &self.spec.policy
    }

    pub fn identity(&self) -> String {
        self.spec.identity()
    }

    pub fn is_available(&self) -> bool {
        !matches!(self.backend, Backend::Unavailable(_))
    }

    /// `(rows, cols)` of every encoding this binding produces.
    pub fn input_shape(&self) -> (usize, usize) {
        (self.spec.policy.rows(), self.spec.dimension)
    }

    fn unavailable(&self, reason: impl Into<String>) -> Error {
        Error::EncoderUnavailable {
            identity: self.identity(),
            reason: reason.into(),
        }
    }

    pub fn encode(&self, doc: &DocumentRecord, summary: &TokenSequence) -> Result<Encoding> {
        match self.spec.policy.unit {
            Unit::JointToken => encode_joint(doc, summary, self).map(Encoding::Joint),
            Unit::Sentence | Unit::Word => encode_sequence(doc, summary, self).map(Encoding::Sequence),
        }
    }

    fn check_len(&self, v: Vec<f64>) -> Result<Vec<f64>> {
        if v.len() != self.spec.dimension {
            return Err(self.unavailable(format!(
                "adapter returned {} values, expected {}",
                v.len(),
                self.spec.dimension
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(self.unavailable("adapter returned non-finite values"));
        }
        Ok(v)
    }
}

fn fill_rows(data: &mut [f64], mask: &mut [bool], dim: usize, offset: usize, rows: Vec<Vec<f64>>) {
    for (r, v) in rows.into_iter().enumerate() {
        let at = (offset + r) * dim;
        data[at..at + dim].copy_from_slice(&v);
        mask[offset + r] = true;
    }
}

/// Sequence encoding: the first `doc_limit` rows hold the leading document
/// units, the next `summary_limit` rows the leading summary units; missing
/// rows are zero and unmasked.
pub fn encode_sequence(doc: &DocumentRecord, summary: &TokenSequence, binding: &EncoderBinding) -> Result<EmbeddingSequence> {
    let policy = binding.spec.policy;
    let dim = binding.spec.dimension;
    let (dl, sl) = (policy.doc_limit, policy.summary_limit);
    let (doc_rows, sum_rows): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match (&binding.backend, policy.unit) {
        (Backend::Unavailable(reason), _) => return Err(binding.unavailable(reason.clone())),
        (_, Unit::JointToken) => {
            return Err(Error::Config(format!(
                "{} produces joint encodings, not sequences",
                binding.identity()
            )))
        }
        (Backend::Joint(_), _) => return Err(Error::Config("joint encoder cannot produce sequences".into())),
        (Backend::Precomputed(side), _) => {
            let d = side.sequence(&doc_key(&doc.doc_id))?;
            let s = side.sequence(&summary_key(summary))?;
            (d.iter().take(dl).cloned().collect(), s.iter().take(sl).cloned().collect())
        }
        (Backend::WordTable(table), _) => {
            let d = tokenize(&doc.text).iter().take(dl).map(|t| table.lookup(t)).collect();
            let s = summary.tokens.iter().take(sl).map(|t| table.lookup(t)).collect();
            (d, s)
        }
        (Backend::Hashed(h), Unit::Word) => (
            tokenize(&doc.text).iter().take(dl).map(|t| h.embed_tokens(&[t])).collect(),
            summary.tokens.iter().take(sl).map(|t| h.embed_tokens(&[t])).collect(),
        ),
        (Backend::Hashed(h), Unit::Sentence) => (
            doc.sentences.iter().take(dl).map(|s| h.embed_tokens(&tokenize(s))).collect(),
            split_token_sentences(&summary.tokens)
                .iter()
                .take(sl)
                .map(|s| h.embed_tokens(s))
                .collect(),
        ),
        (Backend::Sentence(enc), Unit::Sentence) => {
            let d = doc.sentences.iter().take(dl).map(|s| enc.embed(s)).collect::<Result<Vec<_>>>()?;
            let s = split_token_sentences(&summary.tokens)
                .iter()
                .take(sl)
                .map(|s| enc.embed(&s.join(" ")))
                .collect::<Result<Vec<_>>>()?;
            (d, s)
        }
        (Backend::Sentence(_), Unit::Word) => {
            return Err(Error::Config("sentence encoder cannot produce word rows".into()))
        }
    };
    let doc_rows = doc_rows.into_iter().map(|v| binding.check_len(v)).collect::<Result<Vec<_>>>()?;
    let sum_rows = sum_rows.into_iter().map(|v| binding.check_len(v)).collect::<Result<Vec<_>>>()?;
    let rows = dl + sl;
    let mut data = vec![0.0; rows * dim];
    let mut mask = vec![false; rows];
    fill_rows(&mut data, &mut mask, dim, 0, doc_rows);
    fill_rows(&mut data, &mut mask, dim, dl, sum_rows);
    Ok(EmbeddingSequence {
        data,
        dim,
        mask,
        doc_rows: dl,
        summary_rows: sl,
    })
}

/// Joint encoding of the packed pair; see [`fit_joint_budget`] for the
/// truncation rule.
pub fn encode_joint(doc: &DocumentRecord, summary: &TokenSequence, binding: &EncoderBinding) -> Result<JointEncoding> {
    let policy = binding.spec.policy;
    if policy.unit != Unit::JointToken {
        return Err(Error::Config(format!("{} is not a joint encoder", binding.identity())));
    }
    let vector = match &binding.backend {
        Backend::Unavailable(reason) => return Err(binding.unavailable(reason.clone())),
        Backend::Precomputed(side) => side.joint(&pair_key(&doc.doc_id, summary))?.to_vec(),
        Backend::Joint(enc) => {
            let input = pack_joint(&tokenize(&doc.text), &summary.tokens, policy.joint_budget)?;
            enc.encode(&input).map_err(|e| match e {
                e @ Error::EncoderUnavailable { .. } => e,
                other => binding.unavailable(other.to_string()),
            })?
        }
        _ => return Err(Error::Config(format!("{} cannot encode pairs", binding.identity()))),
    };
    Ok(JointEncoding {
        vector: binding.check_len(vector)?,
    })
}

/// Loads a word-vector table; the binding defaults to word-level limits of
/// 1091 document and 55 summary tokens.
pub fn load_word_table(path: &Path) -> Result<EncoderBinding> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::EncoderUnavailable {
        identity: format!("word_table({})", path.display()),
        reason: e.to_string(),
    })?;
    let table = WordTable::parse(&text)?;
    let spec = EncoderSpec {
        kind: EncoderKind::WordTable,
        dimension: table.dim,
        policy: PaddingPolicy::word(WORD_LIMITS.0, WORD_LIMITS.1),
        seed: None,
        path: Some(path.to_path_buf()),
        name: None,
        fine_tuned: false,
    };
    Ok(EncoderBinding {
        spec,
        backend: Backend::WordTable(Arc::new(table)),
    })
}

/// Loads a precomputed sidecar. Files holding joint vectors get a joint
/// policy with a 512-token budget, otherwise sentence limits of 47 and 3.
pub fn load_precomputed(path: &Path) -> Result<EncoderBinding> {
    if !path.exists() {
        return Err(Error::EncoderUnavailable {
            identity: format!("precomputed({})", path.display()),
            reason: "sidecar file not found".into(),
        });
    }
    let side = Sidecar::read(path)?;
    if side.dim == 0 {
        return Err(Error::Format(format!("sidecar {} has no entries", path.display())));
    }
    let policy = if side.joints.is_empty() {
        PaddingPolicy::sentence(SENTENCE_LIMITS.0, SENTENCE_LIMITS.1)
    } else {
        PaddingPolicy::joint(JOINT_BUDGET)
    };
    let spec = EncoderSpec {
        kind: EncoderKind::Precomputed,
        dimension: side.dim,
        policy,
        seed: None,
        path: Some(path.to_path_buf()),
        name: None,
        fine_tuned: false,
    };
    Ok(EncoderBinding {
        spec,
        backend: Backend::Precomputed(Arc::new(side)),
    })
}
