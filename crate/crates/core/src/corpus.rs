//! Document/summary corpora, human-judgment files and leakage-free splits.
//!
//! Corpora are stored as JSONL, one record per line:
//!
//! ```text
//! {"kind":"doc","doc_id":"d1","text":"...","domain":"news"}
//! {"kind":"summary","summary_id":"s1","doc_id":"d1","text":"...","origin":"reference"}
//! ```
//!
//! Sentence segmentation happens once, at load time, and is written back on
//! save (`"sentences": [...]`) so every later stage sees the same sentences.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::textproc::{split_sentences_with, Abbreviations};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub text: String,
    pub sentences: Vec<String>,
    pub domain: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryOrigin {
    Reference,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary_id: String,
    pub doc_id: String,
    pub text: String,
    pub sentences: Vec<String>,
    pub origin: SummaryOrigin,
}

impl DocumentRecord {
    /// Builds a record, splitting `text` with the built-in abbreviation list.
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, domain: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            doc_id: doc_id.into(),
            sentences: split_sentences_with(&text, Abbreviations::builtin()),
            text,
            domain: domain.into(),
        }
    }
}

impl SummaryRecord {
    pub fn new(
        summary_id: impl Into<String>,
        doc_id: impl Into<String>,
        text: impl Into<String>,
        origin: SummaryOrigin,
    ) -> Self {
        let text = text.into();
        Self {
            summary_id: summary_id.into(),
            doc_id: doc_id.into(),
            sentences: split_sentences_with(&text, Abbreviations::builtin()),
            text,
            origin,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CorpusLine {
    Doc {
        doc_id: String,
        text: String,
        #[serde(default)]
        domain: Option<String>,
        #[serde(default)]
        sentences: Option<Vec<String>>,
    },
    Summary {
        summary_id: String,
        doc_id: String,
        text: String,
        origin: SummaryOrigin,
        #[serde(default)]
        sentences: Option<Vec<String>>,
    },
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CorpusLineOut<'a> {
    Doc {
        doc_id: &'a str,
        text: &'a str,
        domain: &'a str,
        sentences: &'a [String],
    },
    Summary {
        summary_id: &'a str,
        doc_id: &'a str,
        text: &'a str,
        origin: SummaryOrigin,
        sentences: &'a [String],
    },
}

/// An immutable collection of documents and their summaries.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<DocumentRecord>,
    summaries: Vec<SummaryRecord>,
    by_id: HashMap<String, usize>,
    /// First reference summary per document.
    reference_of: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.documents == other.documents && self.summaries == other.summaries
    }
}

/// Record counts returned alongside a freshly loaded corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusCounts {
    pub documents: usize,
    pub reference_summaries: usize,
    pub system_summaries: usize,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and that every summary points
    /// at a known document.
    pub fn new(documents: Vec<DocumentRecord>, summaries: Vec<SummaryRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter().enumerate() {
            if d.text.trim().is_empty() {
                return Err(Error::DegenerateInput(format!("document \"{}\" has empty text", d.doc_id)));
            }
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::Duplicate(format!("doc_id \"{}\"", d.doc_id)));
            }
        }
        let mut summary_ids = HashSet::with_capacity(summaries.len());
        let mut reference_of = HashMap::new();
        for (i, s) in summaries.iter().enumerate() {
            if !by_id.contains_key(&s.doc_id) {
                return Err(Error::ReferentialIntegrity {
                    what: "doc_id",
                    id: s.doc_id.clone(),
                });
            }
            if s.text.trim().is_empty() {
                return Err(Error::DegenerateInput(format!("summary \"{}\" has empty text", s.summary_id)));
            }
            if !summary_ids.insert(s.summary_id.as_str()) {
                return Err(Error::Duplicate(format!("summary_id \"{}\"", s.summary_id)));
            }
            if s.origin == SummaryOrigin::Reference {
                reference_of.entry(s.doc_id.clone()).or_insert(i);
            }
        }
        Ok(Self {
            documents,
            summaries,
            by_id,
            reference_of,
        })
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn summaries(&self) -> &[SummaryRecord] {
        &self.summaries
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.by_id.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn require_document(&self, doc_id: &str) -> Result<&DocumentRecord> {
        self.document(doc_id).ok_or_else(|| Error::ReferentialIntegrity {
            what: "doc_id",
            id: doc_id.to_string(),
        })
    }

    pub fn reference_summaries(&self) -> impl Iterator<Item = &SummaryRecord> {
        self.summaries.iter().filter(|s| s.origin == SummaryOrigin::Reference)
    }

    /// First reference summary of `doc_id`, in file order.
    pub fn reference_for(&self, doc_id: &str) -> Option<&SummaryRecord> {
        self.reference_of.get(doc_id).map(|&i| &self.summaries[i])
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn counts(&self) -> CorpusCounts {
        let reference = self.reference_summaries().count();
        CorpusCounts {
            documents: self.documents.len(),
            reference_summaries: reference,
            system_summaries: self.summaries.len() - reference,
        }
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.doc_id.clone()).collect()
    }

    /// Restricts the corpus to the given documents and their summaries.
    pub fn subset(&self, doc_ids: &[String]) -> Result<Corpus> {
        let keep: HashSet<&str> = doc_ids.iter().map(String::as_str).collect();
        for id in &keep {
            self.require_document(id)?;
        }
        let docs = self
            .documents
            .iter()
            .filter(|d| keep.contains(d.doc_id.as_str()))
            .cloned()
            .collect();
        let sums = self
            .summaries
            .iter()
            .filter(|s| keep.contains(s.doc_id.as_str()))
            .cloned()
            .collect();
        Corpus::new(docs, sums)
    }

    /// A uniform random subset of `n` documents with their summaries. The
    /// draw depends only on the id set and `seed`.
    pub fn sample_documents(&self, n: usize, seed: u64) -> Result<Corpus> {
        if n > self.len() {
            return Err(Error::InsufficientData(format!(
                "cannot sample {n} documents from a corpus of {}",
                self.len()
            )));
        }
        let mut ids = self.doc_ids();
        ids.sort();
        ids.shuffle(&mut seeded(seed));
        ids.truncate(n);
        self.subset(&ids)
    }

    /// Writes the corpus as JSONL, documents first, in stored order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |line: CorpusLineOut| -> Result<()> {
            let json = serde_json::to_string(&line).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(w, "{json}").map_err(|e| Error::io(path, e))
        };
        for d in &self.documents {
            put(CorpusLineOut::Doc {
                doc_id: &d.doc_id,
                text: &d.text,
                domain: &d.domain,
                sentences: &d.sentences,
            })?;
        }
        for s in &self.summaries {
            put(CorpusLineOut::Summary {
                summary_id: &s.summary_id,
                doc_id: &s.doc_id,
                text: &s.text,
                origin: s.origin,
                sentences: &s.sentences,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn read_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Loads a JSONL corpus with the built-in abbreviation list.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    load_corpus_with(path, Abbreviations::builtin())
}

pub fn load_corpus_with(path: &Path, abbrevs: &Abbreviations) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut sums = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let empty = |what: &str| Error::Parse {
            line: line_no,
            message: format!("{what} has empty \"text\""),
        };
        match parsed {
            CorpusLine::Doc {
                doc_id,
                text,
                domain,
                sentences,
            } => {
                if text.trim().is_empty() {
                    return Err(empty("doc"));
                }
                let sentences = sentences.unwrap_or_else(|| split_sentences_with(&text, abbrevs));
                docs.push(DocumentRecord {
                    doc_id,
                    text,
                    sentences,
                    domain: domain.unwrap_or_else(|| "unknown".into()),
                });
            }
            CorpusLine::Summary {
                summary_id,
                doc_id,
                text,
                origin,
                sentences,
            } => {
                if text.trim().is_empty() {
                    return Err(empty("summary"));
                }
                let sentences = sentences.unwrap_or_else(|| split_sentences_with(&text, abbrevs));
                sums.push(SummaryRecord {
                    summary_id,
                    doc_id,
                    text,
                    sentences,
                    origin,
                });
            }
        }
    }
    Corpus::new(docs, sums)
}

/// Document-keyed train/validation/test assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl SplitAssignment {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split assignment serializes")
    }
}

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.8, 0.1, 0.1);

/// Shuffles document ids with `seed` and cuts them into three sets of sizes
/// `round(f_tr·N)`, `round(f_va·N)` and the remainder. Every summary follows
/// its document, so no test document is ever seen in training.
pub fn make_splits(corpus: &Corpus, fractions: (f64, f64, f64), seed: u64) -> Result<SplitAssignment> {
    split_ids(corpus.doc_ids(), fractions, seed)
}

pub fn split_ids(mut ids: Vec<String>, fractions: (f64, f64, f64), seed: u64) -> Result<SplitAssignment> {
    let (ftr, fva, fte) = fractions;
    if [ftr, fva, fte].iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::Config(format!("split fractions must be positive, got {fractions:?}")));
    }
    if ((ftr + fva + fte) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions must sum to 1, got {fractions:?}")));
    }
    if ids.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 documents to split, got {}",
            ids.len()
        )));
    }
    // Sort first so the result depends only on the id set, not on file order.
    ids.sort();
    ids.dedup();
    let n = ids.len();
    ids.shuffle(&mut seeded(seed));
    let n_tr = ((ftr * n as f64).round() as usize).min(n);
    let n_va = ((fva * n as f64).round() as usize).min(n - n_tr);
    let mut test = ids.split_off(n_tr + n_va);
    let mut validation = ids.split_off(n_tr);
    let mut train = ids;
    train.sort();
    validation.sort();
    test.sort();
    Ok(SplitAssignment {
        train,
        validation,
        test,
        fractions,
        seed,
    })
}

/// A group of documents that share one candidate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSet {
    pub set_id: String,
    pub doc_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScoreRecord {
    pub set_id: String,
    pub summarizer_id: String,
    pub modified_pyramid: f64,
    pub linguistic_quality: f64,
    pub overall: f64,
    /// Plain pyramid score; accepted but unused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pyramid: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum HumanLine {
    Docset {
        set_id: String,
        doc_ids: Vec<String>,
    },
    Human {
        set_id: String,
        summarizer_id: String,
        modified_pyramid: f64,
        linguistic_quality: f64,
        overall: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pyramid: Option<f64>,
    },
}

fn write_jsonl<T: Serialize>(path: &Path, lines: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        let json = serde_json::to_string(&line).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanScores {
    pub records: Vec<HumanScoreRecord>,
    pub doc_sets: Vec<DocumentSet>,
}

impl HumanScores {
    pub fn doc_set(&self, set_id: &str) -> Option<&DocumentSet> {
        self.doc_sets.iter().find(|s| s.set_id == set_id)
    }

    /// Writes document sets, then judgments, in the format
    /// [`load_human_scores`] reads.
    pub fn save(&self, path: &Path) -> Result<()> {
        let sets = self.doc_sets.iter().map(|s| HumanLine::Docset {
            set_id: s.set_id.clone(),
            doc_ids: s.doc_ids.clone(),
        });
        let judged = self.records.iter().map(|r| HumanLine::Human {
            set_id: r.set_id.clone(),
            summarizer_id: r.summarizer_id.clone(),
            modified_pyramid: r.modified_pyramid,
            linguistic_quality: r.linguistic_quality,
            overall: r.overall,
            pyramid: r.pyramid,
        });
        write_jsonl(path, sets.chain(judged))
    }
}

/// Loads document sets and human judgments from one JSONL file. Document ids
/// inside sets are resolved later, against whichever corpus is used to score.
pub fn load_human_scores(path: &Path) -> Result<HumanScores> {
    let mut out = HumanScores::default();
    let mut set_ids = HashSet::new();
    let mut pairs = HashSet::new();
    for (line_no, line) in read_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: HumanLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match parsed {
            HumanLine::Docset { set_id, doc_ids } => {
                if doc_ids.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("document set \"{set_id}\" is empty"),
                    });
                }
                if !set_ids.insert(set_id.clone()) {
                    return Err(Error::Duplicate(format!("document set \"{set_id}\"")));
                }
                out.doc_sets.push(DocumentSet { set_id, doc_ids });
            }
            HumanLine::Human {
                set_id,
                summarizer_id,
                modified_pyramid,
                linguistic_quality,
                overall,
                pyramid,
            } => {
                if !pairs.insert((set_id.clone(), summarizer_id.clone())) {
                    return Err(Error::Duplicate(format!(
                        "human score for (set \"{set_id}\", summarizer \"{summarizer_id}\")"
                    )));
                }
                out.records.push(HumanScoreRecord {
                    set_id,
                    summarizer_id,
                    modified_pyramid,
                    linguistic_quality,
                    overall,
                    pyramid,
                });
            }
        }
    }
    for r in &out.records {
        if !set_ids.contains(&r.set_id) {
            return Err(Error::ReferentialIntegrity {
                what: "set_id",
                id: r.set_id.clone(),
            });
        }
    }
    Ok(out)
}

/// Candidate and reference summaries attached to document sets, for the
/// alignment and ROUGE commands:
///
/// ```text
/// {"kind":"candidate","set_id":"D1","summarizer_id":"12","text":"..."}
/// {"kind":"reference","set_id":"D1","text":"..."}
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SetSummaries {
    pub candidates: Vec<SetCandidate>,
    pub references: Vec<SetReference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCandidate {
    pub set_id: String,
    pub summarizer_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetReference {
    pub set_id: String,
    pub text: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SetSummaryLine {
    Candidate(SetCandidate),
    Reference(SetReference),
}

impl SetSummaries {
    pub fn save(&self, path: &Path) -> Result<()> {
        let refs = self.references.iter().cloned().map(SetSummaryLine::Reference);
        let cands = self.candidates.iter().cloned().map(SetSummaryLine::Candidate);
        write_jsonl(path, refs.chain(cands))
    }
}

pub fn load_set_summaries(path: &Path) -> Result<SetSummaries> {
    let mut out = SetSummaries::default();
    let mut seen = BTreeSet::new();
    for (line_no, line) in read_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })? {
            SetSummaryLine::Candidate(c) => {
                if !seen.insert((c.set_id.clone(), c.summarizer_id.clone())) {
                    return Err(Error::Duplicate(format!(
                        "candidate for (set \"{}\", summarizer \"{}\")",
                        c.set_id, c.summarizer_id
                    )));
                }
                out.candidates.push(c);
            }
            SetSummaryLine::Reference(r) => out.references.push(r),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_small_corpus() {
        let f = write(&[
            r#"{"kind":"doc","doc_id":"d1","text":"A cat sat. It purred.","domain":"news"}"#,
            r#"{"kind":"doc","doc_id":"d2","text":"Dogs bark."}"#,
            "",
            r#"{"kind":"summary","summary_id":"s1","doc_id":"d1","text":"Cat sat.","origin":"reference"}"#,
            r#"{"kind":"summary","summary_id":"s2","doc_id":"d2","text":"Barking.","origin":"reference"}"#,
        ]);
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(
            c.counts(),
            CorpusCounts {
                documents: 2,
                reference_summaries: 2,
                system_summaries: 0
            }
        );
        assert_eq!(c.document("d1").unwrap().sentences, vec!["A cat sat.", "It purred."]);
        assert_eq!(c.document("d2").unwrap().domain, "unknown");
    }

    #[test]
    fn missing_text_names_line() {
        let f = write(&[
            r#"{"kind":"doc","doc_id":"d1","text":"x"}"#,
            r#"{"kind":"doc","doc_id":"d2"}"#,
        ]);
        match load_corpus(f.path()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("text"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_doc_id() {
        let f = write(&[
            r#"{"kind":"doc","doc_id":"d1","text":"x"}"#,
            r#"{"kind":"summary","summary_id":"s","doc_id":"x9","text":"y","origin":"system"}"#,
        ]);
        let err = load_corpus(f.path()).unwrap_err();
        assert!(matches!(&err, Error::ReferentialIntegrity { id, .. } if id == "x9"), "{err}");
        assert!(err.to_string().contains("x9"));
    }

    #[test]
    fn duplicate_doc_id_rejected() {
        let f = write(&[
            r#"{"kind":"doc","doc_id":"d1","text":"x"}"#,
            r#"{"kind":"doc","doc_id":"d1","text":"y"}"#,
        ]);
        assert!(matches!(load_corpus(f.path()), Err(Error::Duplicate(_))));
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i:05}")).collect()
    }

    #[test]
    fn split_sizes() {
        let s = split_ids(ids(10), DEFAULT_FRACTIONS, 7).unwrap();
        assert_eq!(s.sizes(), (8, 1, 1));
        let s = split_ids(ids(30_000), DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!(s.sizes(), (24_000, 3_000, 3_000));
    }

    #[test]
    fn split_is_deterministic() {
        let a = split_ids(ids(50), DEFAULT_FRACTIONS, 7).unwrap();
        let b = split_ids(ids(50), DEFAULT_FRACTIONS, 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = split_ids(ids(50), DEFAULT_FRACTIONS, 8).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_rejects_bad_input() {
        assert!(matches!(
            split_ids(ids(2), DEFAULT_FRACTIONS, 0),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(split_ids(ids(10), (0.5, 0.5, 0.5), 0), Err(Error::Config(_))));
        assert!(matches!(split_ids(ids(10), (1.0, 0.0, 0.0), 0), Err(Error::Config(_))));
    }

    #[test]
    fn human_scores_load() {
        let f = write(&[
            r#"{"kind":"docset","set_id":"D1","doc_ids":["a","b"]}"#,
            r#"{"kind":"human","set_id":"D1","summarizer_id":"3","modified_pyramid":0.4,"linguistic_quality":3,"overall":2,"pyramid":0.5}"#,
        ]);
        let h = load_human_scores(f.path()).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.records[0].linguistic_quality, 3.0);
        assert_eq!(h.doc_set("D1").unwrap().doc_ids.len(), 2);
    }

    #[test]
    fn human_scores_empty_file() {
        let f = write(&[]);
        let h = load_human_scores(f.path()).unwrap();
        assert!(h.records.is_empty() && h.doc_sets.is_empty());
    }

    #[test]
    fn human_scores_errors() {
        let f = write(&[
            r#"{"kind":"docset","set_id":"D1","doc_ids":["a"]}"#,
            r#"{"kind":"human","set_id":"D1","summarizer_id":"3","modified_pyramid":0.4,"linguistic_quality":3,"overall":2}"#,
            r#"{"kind":"human","set_id":"D1","summarizer_id":"3","modified_pyramid":0.1,"linguistic_quality":1,"overall":1}"#,
        ]);
        assert!(matches!(load_human_scores(f.path()), Err(Error::Duplicate(_))));
        let f = write(&[
            r#"{"kind":"human","set_id":"D7","summarizer_id":"3","modified_pyramid":0.4,"linguistic_quality":3,"overall":2}"#,
        ]);
        assert!(matches!(
            load_human_scores(f.path()),
            Err(Error::ReferentialIntegrity { id, .. }) if id == "D7"
        ));
    }
}
