//! Experiment suites: held-out evaluation, cross-domain transfer and
//! correlation with human judgments, each producing a report that renders
//! both as JSON and as an aligned text table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, DocumentSet, HumanScoreRecord, HumanScores, SetSummaries};
use crate::error::{Error, Result};
use crate::metrics::{self, correlate, Coefficient, CorrelationResult, RougeVariant};
use crate::model::PairScorer;
use crate::sampler::{LabeledSample, Provenance};
use crate::textproc::{tokenize, TokenSequence};

pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    /// Classification for cross-paired samples, regression otherwise.
    pub fn infer(samples: &[LabeledSample]) -> Task {
        if samples.iter().any(|s| s.provenance == Provenance::Crosspair) {
            Task::Classification
        } else {
            Task::Regression
        }
    }

    fn check(self, samples: &[LabeledSample]) -> Result<()> {
        let mismatch = match self {
            Task::Classification => samples.iter().any(|s| s.label != 0.0 && s.label != 1.0),
            Task::Regression => samples.iter().any(|s| s.provenance == Provenance::Crosspair),
        };
        if mismatch {
            return Err(Error::Config(format!("{self:?} does not match the sample labels")));
        }
        Ok(())
    }
}

/// A named sample set together with the corpus its documents come from.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a> {
    pub name: &'a str,
    pub corpus: &'a Corpus,
    pub samples: &'a [LabeledSample],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    /// `accuracy_pct` or `pcc_x100`.
    pub metric: &'static str,
    pub value: Coefficient,
    pub dataset: String,
    pub model: String,
    pub samples: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_table(&self) -> String {
        let mut t = Table::new(&["dataset", "model", "task", "metric", "value", "samples"]);
        t.row(vec![
            self.dataset.clone(),
            self.model.clone(),
            format!("{:?}", self.task).to_lowercase(),
            self.metric.to_string(),
            fmt_pct(self.value),
            self.samples.to_string(),
        ]);
        t.render()
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn fmt_pct(c: Coefficient) -> String {
    match c {
        Coefficient::Value(v) => format!("{v:.2}"),
        Coefficient::Undefined => "undefined".into(),
    }
}

/// Scores every sample, in order.
pub fn predict_all(scorer: &dyn PairScorer, corpus: &Corpus, samples: &[LabeledSample]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| scorer.score(corpus.require_document(&s.doc_id)?, &s.summary_tokens))
        .collect()
}

/// Accuracy (percent, threshold 0.5) for classification, Pearson ×100 for
/// regression.
pub fn evaluate(scorer: &dyn PairScorer, set: EvalSet, task: Task) -> Result<EvalReport> {
    task.check(set.samples)?;
    let predictions = predict_all(scorer, set.corpus, set.samples)?;
    let labels: Vec<f64> = set.samples.iter().map(|s| s.label).collect();
    let (metric, value) = match task {
        Task::Classification => (
            "accuracy_pct",
            Coefficient::Value(100.0 * metrics::accuracy(&predictions, &labels, THRESHOLD)?),
        ),
        Task::Regression => (
            "pcc_x100",
            Coefficient::from_result(metrics::pearson(&predictions, &labels).map(|r| 100.0 * r))?,
        ),
    };
    Ok(EvalReport {
        task,
        metric,
        value,
        dataset: set.name.to_string(),
        model: scorer.identity(),
        samples: set.samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossDomainCell {
    pub source: String,
    pub target: String,
    pub target_size: usize,
    pub accuracy: f64,
    pub in_domain: bool,
    /// Accuracy minus the source's in-domain accuracy, when that cell exists.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossDomainReport {
    pub cells: Vec<CrossDomainCell>,
}

/// Evaluates every source scorer on every target set (classification).
pub fn cross_domain_matrix(scorers: &[(&str, &dyn PairScorer)], targets: &[EvalSet]) -> Result<CrossDomainReport> {
    let mut cells = Vec::with_capacity(scorers.len() * targets.len());
    for &(source, scorer) in scorers {
        let mut row = Vec::with_capacity(targets.len());
        for target in targets {
            let report = evaluate(scorer, *target, Task::Classification)?;
            row.push(CrossDomainCell {
                source: source.to_string(),
                target: target.name.to_string(),
                target_size: target.samples.len(),
                accuracy: report.value.value().unwrap_or(f64::NAN),
                in_domain: source == target.name,
                delta: None,
            });
        }
        let base = row.iter().find(|c| c.in_domain).map(|c| c.accuracy);
        for c in &mut row {
            c.delta = base.map(|b| c.accuracy - b);
        }
        cells.extend(row);
    }
    Ok(CrossDomainReport { cells })
}

impl CrossDomainReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_table(&self) -> String {
        let mut t = Table::new(&["source", "target", "size", "accuracy_pct", "delta"]);
        for c in &self.cells {
            t.row(vec![
                c.source.clone(),
                if c.in_domain {
                    format!("{} *", c.target)
                } else {
                    c.target.clone()
                },
                c.target_size.to_string(),
                format!("{:.2}", c.accuracy),
                c.delta.map(|d| format!("{d:+.2}")).unwrap_or_else(|| "-".into()),
            ]);
        }
        t.render()
    }
}

/// Sum of the scores of `summary` against every document of the set.
pub fn set_score(scorer: &dyn PairScorer, corpus: &Corpus, doc_set: &DocumentSet, summary: &TokenSequence) -> Result<f64> {
    let mut total = 0.0;
    for id in &doc_set.doc_ids {
        total += scorer.score(corpus.require_document(id)?, summary)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreType {
    ModifiedPyramid,
    LinguisticQuality,
    Overall,
}

impl ScoreType {
    pub const ALL: [ScoreType; 3] = [ScoreType::ModifiedPyramid, ScoreType::LinguisticQuality, ScoreType::Overall];

    pub fn of(self, r: &HumanScoreRecord) -> f64 {
        match self {
            ScoreType::ModifiedPyramid => r.modified_pyramid,
            ScoreType::LinguisticQuality => r.linguistic_quality,
            ScoreType::Overall => r.overall,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreType::ModifiedPyramid => "modified_pyramid",
            ScoreType::LinguisticQuality => "linguistic_quality",
            ScoreType::Overall => "overall",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AlignOptions {
    /// Drop uncovered pairs instead of failing.
    pub allow_partial: bool,
    /// Summarizers left out of the comparison, e.g. human-written ones.
    pub exclude_summarizers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageGap {
    pub set_id: String,
    pub summarizer_id: String,
    pub reason: String,
}

/// Correlations of one score series with each human score type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentRow {
    pub system: String,
    pub modified_pyramid: CorrelationResult,
    pub linguistic_quality: CorrelationResult,
    pub overall: CorrelationResult,
}

impl AlignmentRow {
    fn build(system: String, scores: &[f64], humans: &[&HumanScoreRecord]) -> Result<Self> {
        let against = |t: ScoreType| {
            let h: Vec<f64> = humans.iter().map(|r| t.of(r)).collect();
            correlate(scores, &h)
        };
        Ok(Self {
            system,
            modified_pyramid: against(ScoreType::ModifiedPyramid)?,
            linguistic_quality: against(ScoreType::LinguisticQuality)?,
            overall: against(ScoreType::Overall)?,
        })
    }

    pub fn get(&self, t: ScoreType) -> &CorrelationResult {
        match t {
            ScoreType::ModifiedPyramid => &self.modified_pyramid,
            ScoreType::LinguisticQuality => &self.linguistic_quality,
            ScoreType::Overall => &self.overall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub pairs: usize,
    pub dropped: Vec<CoverageGap>,
    pub model: Option<AlignmentRow>,
    pub rouge: Vec<AlignmentRow>,
}

/// One scored (set, summarizer) pair.
struct Pair<'a> {
    human: &'a HumanScoreRecord,
    text: &'a str,
    references: Vec<&'a str>,
}

fn select_pairs<'a>(
    human: &'a HumanScores,
    summaries: &'a SetSummaries,
    corpus: Option<&Corpus>,
    need_references: bool,
    options: &AlignOptions,
) -> Result<(Vec<Pair<'a>>, Vec<CoverageGap>)> {
    let excluded: BTreeSet<&str> = options.exclude_summarizers.iter().map(String::as_str).collect();
    let candidates: HashMap<(&str, &str), &str> = summaries
        .candidates
        .iter()
        .map(|c| ((c.set_id.as_str(), c.summarizer_id.as_str()), c.text.as_str()))
        .collect();
    let mut references: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in &summaries.references {
        references.entry(r.set_id.as_str()).or_default().push(r.text.as_str());
    }
    let mut records: Vec<&HumanScoreRecord> = human
        .records
        .iter()
        .filter(|r| !excluded.contains(r.summarizer_id.as_str()))
        .collect();
    records.sort_by(|a, b| (&a.set_id, &a.summarizer_id).cmp(&(&b.set_id, &b.summarizer_id)));

    let mut pairs = Vec::new();
    let mut gaps = Vec::new();
    let gap = |r: &HumanScoreRecord, reason: String| CoverageGap {
        set_id: r.set_id.clone(),
        summarizer_id: r.summarizer_id.clone(),
        reason,
    };
    for r in records {
        let Some(text) = candidates.get(&(r.set_id.as_str(), r.summarizer_id.as_str())) else {
            gaps.push(gap(r, "no candidate summary".into()));
            continue;
        };
        if tokenize(text).is_empty() {
            gaps.push(gap(r, "empty candidate summary".into()));
            continue;
        }
        if let Some(corpus) = corpus {
            match human.doc_set(&r.set_id) {
                None => {
                    gaps.push(gap(r, "unknown document set".into()));
                    continue;
                }
                Some(set) => {
                    if let Some(missing) = set.doc_ids.iter().find(|id| corpus.document(id).is_none()) {
                        gaps.push(gap(r, format!("document \"{missing}\" not in corpus")));
                        continue;
                    }
                }
            }
        }
        let refs = references.get(r.set_id.as_str()).cloned().unwrap_or_default();
        if need_references && refs.is_empty() {
            gaps.push(gap(r, "no reference summary".into()));
            continue;
        }
        pairs.push(Pair {
            human: r,
            text,
            references: refs,
        });
    }
    // candidates nobody judged
    let judged: BTreeSet<(&str, &str)> = human
        .records
        .iter()
        .map(|r| (r.set_id.as_str(), r.summarizer_id.as_str()))
        .collect();
    let mut unjudged: Vec<_> = summaries
        .candidates
        .iter()
        .filter(|c| !excluded.contains(c.summarizer_id.as_str()))
        .filter(|c| !judged.contains(&(c.set_id.as_str(), c.summarizer_id.as_str())))
        .map(|c| CoverageGap {
            set_id: c.set_id.clone(),
            summarizer_id: c.summarizer_id.clone(),
            reason: "no human score".into(),
        })
        .collect();
    unjudged.sort_by(|a, b| (&a.set_id, &a.summarizer_id).cmp(&(&b.set_id, &b.summarizer_id)));
    gaps.extend(unjudged);

    if !gaps.is_empty() && !options.allow_partial {
        let first = &gaps[0];
        return Err(Error::InsufficientData(format!(
            "{} uncovered (set, summarizer) pairs, first ({}, {}): {}; pass allow_partial to drop them",
            gaps.len(),
            first.set_id,
            first.summarizer_id,
            first.reason
        )));
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} comparable pairs", pairs.len())));
    }
    Ok((pairs, gaps))
}

/// Source id given to candidate token sequences: `"<set_id>/<summarizer_id>"`.
pub fn candidate_source_id(set_id: &str, summarizer_id: &str) -> String {
    format!("{set_id}/{summarizer_id}")
}

fn rouge_rows(pairs: &[Pair], variants: &[RougeVariant]) -> Result<Vec<AlignmentRow>> {
    let lower = |t: &str| -> Vec<String> { tokenize(t).into_iter().map(|w| w.to_lowercase()).collect() };
    let humans: Vec<&HumanScoreRecord> = pairs.iter().map(|p| p.human).collect();
    let mut rows = Vec::with_capacity(3 * variants.len());
    for &variant in variants {
        let scores: Vec<metrics::RougeScore> = pairs
            .par_iter()
            .map(|p| {
                let refs: Vec<Vec<String>> = p.references.iter().map(|r| lower(r)).collect();
                metrics::rouge_max(&lower(p.text), &refs, variant)
            })
            .collect::<Result<_>>()?;
        for (suffix, pick) in [
            ("P", (|s: &metrics::RougeScore| s.precision) as fn(&metrics::RougeScore) -> f64),
            ("R", |s| s.recall),
            ("F", |s| s.f1),
        ] {
            let series: Vec<f64> = scores.iter().map(pick).collect();
            rows.push(AlignmentRow::build(format!("{variant} {suffix}"), &series, &humans)?);
        }
    }
    Ok(rows)
}

/// Correlates set scores of `scorer` with the human judgments and, when
/// `rouge_variants` is non-empty, adds ROUGE baseline rows computed on the
/// same pairs.
pub fn align_with_humans(
    scorer: &dyn PairScorer,
    corpus: &Corpus,
    human: &HumanScores,
    summaries: &SetSummaries,
    rouge_variants: &[RougeVariant],
    options: &AlignOptions,
) -> Result<AlignmentReport> {
    let (pairs, dropped) = select_pairs(human, summaries, Some(corpus), !rouge_variants.is_empty(), options)?;
    let scores: Vec<f64> = pairs
        .par_iter()
        .map(|p| {
            let set = human.doc_set(&p.human.set_id).expect("checked in select_pairs");
            let summary = TokenSequence::from_text(p.text, candidate_source_id(&p.human.set_id, &p.human.summarizer_id));
            set_score(scorer, corpus, set, &summary)
        })
        .collect::<Result<_>>()?;
    let humans: Vec<&HumanScoreRecord> = pairs.iter().map(|p| p.human).collect();
    Ok(AlignmentReport {
        pairs: pairs.len(),
        dropped,
        model: Some(AlignmentRow::build(scorer.identity(), &scores, &humans)?),
        rouge: rouge_rows(&pairs, rouge_variants)?,
    })
}

/// ROUGE rows alone, one per variant and suffix (P, R, F).
pub fn rouge_baseline(
    human: &HumanScores,
    summaries: &SetSummaries,
    variants: &[RougeVariant],
    options: &AlignOptions,
) -> Result<AlignmentReport> {
    let (pairs, dropped) = select_pairs(human, summaries, None, true, options)?;
    Ok(AlignmentReport {
        pairs: pairs.len(),
        dropped,
        model: None,
        rouge: rouge_rows(&pairs, variants)?,
    })
}

impl AlignmentReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// The model block lists score types down and coefficients across; the
    /// ROUGE block lists one row per variant and suffix.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(m) = &self.model {
            let _ = writeln!(out, "model: {}  (pairs: {})", m.system, self.pairs);
            let mut t = Table::new(&["score_type", "pearson", "spearman", "n"]);
            for st in ScoreType::ALL {
                let c = m.get(st);
                t.row(vec![st.name().into(), c.pearson.to_string(), c.spearman.to_string(), c.n.to_string()]);
            }
            out.push_str(&t.render());
        }
        if !self.rouge.is_empty() {
            if !out.is_empty() {
                out.push('\n');
            }
            let mut headers = vec!["baseline".to_string()];
            for st in ScoreType::ALL {
                headers.push(format!("{}_pearson", st.name()));
                headers.push(format!("{}_spearman", st.name()));
            }
            let mut t = Table::new(&headers.iter().map(String::as_str).collect::<Vec<_>>());
            for r in &self.rouge {
                let mut cells = vec![r.system.clone()];
                for st in ScoreType::ALL {
                    cells.push(r.get(st).pearson.to_string());
                    cells.push(r.get(st).spearman.to_string());
                }
                t.row(cells);
            }
            out.push_str(&t.render());
        }
        if !self.dropped.is_empty() {
            let _ = writeln!(out, "\ndropped {} pairs:", self.dropped.len());
            let mut by_reason: BTreeMap<&str, usize> = BTreeMap::new();
            for g in &self.dropped {
                *by_reason.entry(g.reason.as_str()).or_default() += 1;
            }
            for (reason, n) in by_reason {
                let _ = writeln!(out, "  {n:>5}  {reason}");
            }
        }
        out
    }
}

/// Left-aligned first column, right-aligned numbers.
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.headers[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for cells in std::iter::once(&self.headers).chain(&self.rows) {
            let line: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocumentRecord, SetCandidate, SetReference, SummaryOrigin, SummaryRecord};

    struct Constant(f64);

    impl PairScorer for Constant {
        fn score(&self, _: &DocumentRecord, _: &TokenSequence) -> Result<f64> {
            Ok(self.0)
        }
        fn identity(&self) -> String {
            format!("constant({})", self.0)
        }
    }

    fn corpus(n: usize) -> Corpus {
        let docs = (0..n)
            .map(|i| DocumentRecord {
                doc_id: format!("d{i}"),
                text: format!("Document {i}."),
                sentences: vec![format!("Document {i}.")],
                domain: "x".into(),
            })
            .collect();
        let sums = (0..n)
            .map(|i| SummaryRecord {
                summary_id: format!("s{i}"),
                doc_id: format!("d{i}"),
                text: format!("Doc {i}."),
                sentences: vec![format!("Doc {i}.")],
                origin: SummaryOrigin::Reference,
            })
            .collect();
        Corpus::new(docs, sums).unwrap()
    }

    #[test]
    fn constant_set_score() {
        let c = corpus(10);
        let set = DocumentSet {
            set_id: "A".into(),
            doc_ids: c.doc_ids(),
        };
        let s = set_score(&Constant(0.5), &c, &set, &TokenSequence::from_text("x", "x")).unwrap();
        assert_eq!(s, 5.0);
        let bad = DocumentSet {
            set_id: "B".into(),
            doc_ids: vec!["nope".into()],
        };
        assert!(matches!(
            set_score(&Constant(0.5), &c, &bad, &TokenSequence::from_text("x", "x")),
            Err(Error::ReferentialIntegrity { .. })
        ));
    }

    fn grid() -> (HumanScores, SetSummaries) {
        let mut human = HumanScores::default();
        let mut sums = SetSummaries::default();
        for s in 0..3 {
            let set_id = format!("S{s}");
            human.doc_sets.push(DocumentSet {
                set_id: set_id.clone(),
                doc_ids: vec![format!("d{s}")],
            });
            sums.references.push(SetReference {
                set_id: set_id.clone(),
                text: "the cat sat on the mat".into(),
            });
            for m in 0..4 {
                human.records.push(HumanScoreRecord {
                    set_id: set_id.clone(),
                    summarizer_id: format!("m{m}"),
                    modified_pyramid: (s * 4 + m) as f64,
                    linguistic_quality: m as f64,
                    overall: (s + m) as f64,
                    pyramid: None,
                });
                sums.candidates.push(SetCandidate {
                    set_id: set_id.clone(),
                    summarizer_id: format!("m{m}"),
                    text: "the cat sat on the mat".into(),
                });
            }
        }
        (human, sums)
    }

    #[test]
    fn constant_scorer_is_undefined_per_type() {
        let (human, sums) = grid();
        let r = align_with_humans(&Constant(0.3), &corpus(3), &human, &sums, &[], &AlignOptions::default()).unwrap();
        let m = r.model.unwrap();
        for st in ScoreType::ALL {
            assert_eq!(m.get(st).pearson, Coefficient::Undefined);
            assert_eq!(m.get(st).spearman, Coefficient::Undefined);
        }
    }

    #[test]
    fn rouge_rows_shape_and_identical_candidates() {
        let (human, sums) = grid();
        let r = rouge_baseline(&human, &sums, &metrics::STANDARD_VARIANTS, &AlignOptions::default()).unwrap();
        assert_eq!(r.rouge.len(), 12);
        assert_eq!(r.rouge[0].system, "ROUGE-1 P");
        assert_eq!(r.rouge[11].system, "ROUGE-W-1.2 F");
        assert!(r.rouge.iter().all(|row| row.overall.pearson == Coefficient::Undefined));
    }

    #[test]
    fn gaps_fail_unless_partial_allowed() {
        let (human, mut sums) = grid();
        sums.candidates.pop();
        let strict = rouge_baseline(&human, &sums, &metrics::STANDARD_VARIANTS, &AlignOptions::default());
        assert!(matches!(strict, Err(Error::InsufficientData(_))));
        let opts = AlignOptions {
            allow_partial: true,
            ..Default::default()
        };
        let r = rouge_baseline(&human, &sums, &metrics::STANDARD_VARIANTS, &opts).unwrap();
        assert_eq!(r.pairs, 11);
        assert_eq!(r.dropped.len(), 1);
        assert_eq!(r.dropped[0].reason, "no candidate summary");
    }

    #[test]
    fn tables_render() {
        let (human, sums) = grid();
        let r = rouge_baseline(&human, &sums, &metrics::STANDARD_VARIANTS, &AlignOptions::default()).unwrap();
        let t = r.to_table();
        assert_eq!(t.lines().count(), 13);
        assert!(t.contains("undefined"));
    }
}
