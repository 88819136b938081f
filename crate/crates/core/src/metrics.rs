//! Accuracy, correlation coefficients and ROUGE.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

fn same_length(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("lengths differ: {a} vs {b}")));
    }
    Ok(())
}

/// Fraction of predictions on the correct side of `threshold`, where a
/// prediction at or above the threshold means label 1.
pub fn accuracy(predictions: &[f64], labels: &[f64], threshold: f64) -> Result<f64> {
    same_length(predictions.len(), labels.len())?;
    if predictions.is_empty() {
        return Err(Error::InsufficientData("accuracy of zero predictions".into()));
    }
    if let Some(l) = labels.iter().find(|l| **l != 0.0 && **l != 1.0) {
        return Err(Error::Config(format!("accuracy needs 0/1 labels, found {l}")));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| (**p >= threshold) == (**l == 1.0))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    same_length(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("correlation of {} points", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value in correlation input".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::UndefinedCorrelation("an input has zero variance".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("an input has zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Rank correlation: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    same_length(x.len(), y.len())?;
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value in correlation input".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// A correlation that may be undefined; serializes as a number or the
/// string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Value(f64),
    Undefined,
}

impl Coefficient {
    /// Turns an undefined-correlation error into [`Coefficient::Undefined`];
    /// other errors pass through.
    pub fn from_result(r: Result<f64>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Coefficient::Value(v)),
            Err(Error::UndefinedCorrelation(_)) => Ok(Coefficient::Undefined),
            Err(e) => Err(e),
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Coefficient::Value(v) => Some(v),
            Coefficient::Undefined => None,
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Value(v) => write!(f, "{v:.4}"),
            Coefficient::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coefficient::Value(v) => s.serialize_f64(*v),
            Coefficient::Undefined => s.serialize_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub pearson: Coefficient,
    pub spearman: Coefficient,
    pub n: usize,
}

/// Both coefficients; zero variance yields `Undefined` rather than an error.
pub fn correlate(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    Ok(CorrelationResult {
        pearson: Coefficient::from_result(pearson(x, y))?,
        spearman: Coefficient::from_result(spearman(x, y))?,
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RougeVariant {
    N { n: usize },
    W { weight: f64 },
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RougeVariant::N { n } => write!(f, "ROUGE-{n}"),
            RougeVariant::W { weight } => write!(f, "ROUGE-W-{weight}"),
        }
    }
}

/// ROUGE-1, ROUGE-2, ROUGE-4 and ROUGE-W-1.2.
pub const STANDARD_VARIANTS: [RougeVariant; 4] = [
    RougeVariant::N { n: 1 },
    RougeVariant::N { n: 2 },
    RougeVariant::N { n: 4 },
    RougeVariant::W { weight: 1.2 },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub variant: RougeVariant,
}

impl RougeScore {
    fn new(precision: f64, recall: f64, variant: RougeVariant) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            variant,
        }
    }
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    for g in tokens.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

fn as_strs<S: AsRef<str>>(tokens: &[S]) -> Vec<&str> {
    tokens.iter().map(AsRef::as_ref).collect()
}

/// N-gram overlap with clipped counts.
pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Result<RougeScore> {
    if n == 0 {
        return Err(Error::Config("ROUGE-N needs n >= 1".into()));
    }
    if reference.len() < n {
        return Err(Error::UndefinedScore(format!(
            "reference has {} tokens, fewer than n = {n}",
            reference.len()
        )));
    }
    let (cand, refr) = (as_strs(candidate), as_strs(reference));
    let rc = ngram_counts(&refr, n);
    let cc = ngram_counts(&cand, n);
    let overlap: usize = cc.iter().map(|(g, c)| (*c).min(*rc.get(g).unwrap_or(&0))).sum();
    let ref_total = refr.len() + 1 - n;
    let cand_total = cand.len().saturating_sub(n - 1);
    let precision = if cand_total == 0 {
        0.0
    } else {
        overlap as f64 / cand_total as f64
    };
    Ok(RougeScore::new(precision, overlap as f64 / ref_total as f64, RougeVariant::N { n }))
}

/// Weighted LCS score, rewarding consecutive matches through `k^weight`.
pub fn wlcs<S: AsRef<str>>(candidate: &[S], reference: &[S], weight: f64) -> f64 {
    let f = |k: usize| (k as f64).powf(weight);
    let cols = candidate.len() + 1;
    let mut score = vec![0.0; (reference.len() + 1) * cols];
    let mut run = vec![0usize; (reference.len() + 1) * cols];
    for i in 1..=reference.len() {
        for j in 1..cols {
            let (here, diag, up, left) = (i * cols + j, (i - 1) * cols + j - 1, (i - 1) * cols + j, i * cols + j - 1);
            if reference[i - 1].as_ref() == candidate[j - 1].as_ref() {
                let k = run[diag];
                score[here] = score[diag] + f(k + 1) - f(k);
                run[here] = k + 1;
            } else {
                score[here] = score[up].max(score[left]);
            }
        }
    }
    score[reference.len() * cols + candidate.len()]
}

pub fn rouge_w<S: AsRef<str>>(candidate: &[S], reference: &[S], weight: f64) -> Result<RougeScore> {
    if !(weight > 1.0 && weight.is_finite()) {
        return Err(Error::Config(format!("ROUGE-W weight must exceed 1, got {weight}")));
    }
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::UndefinedScore("ROUGE-W of an empty sequence".into()));
    }
    let w = wlcs(candidate, reference, weight);
    let inverse = |v: f64| v.powf(1.0 / weight);
    let norm = |len: usize| inverse(w / (len as f64).powf(weight)).min(1.0);
    Ok(RougeScore::new(norm(candidate.len()), norm(reference.len()), RougeVariant::W { weight }))
}

pub fn rouge<S: AsRef<str>>(candidate: &[S], reference: &[S], variant: RougeVariant) -> Result<RougeScore> {
    match variant {
        RougeVariant::N { n } => rouge_n(candidate, reference, n),
        RougeVariant::W { weight } => rouge_w(candidate, reference, weight),
    }
}

/// Scores against several references, keeping the best precision, recall
/// and F separately. References too short to score are skipped.
pub fn rouge_max<S: AsRef<str>, R: AsRef<[S]>>(candidate: &[S], references: &[R], variant: RougeVariant) -> Result<RougeScore> {
    let mut best: Option<RougeScore> = None;
    let mut last_err = None;
    for r in references {
        match rouge(candidate, r.as_ref(), variant) {
            Ok(s) => {
                best = Some(match best {
                    None => s,
                    Some(b) => RougeScore {
                        precision: b.precision.max(s.precision),
                        recall: b.recall.max(s.recall),
                        f1: b.f1.max(s.f1),
                        variant,
                    },
                })
            }
            Err(e @ Error::UndefinedScore(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::UndefinedScore("no reference summaries".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0.9, 0.1], &[1.0, 0.0], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.9, 0.9], &[1.0, 0.0], 0.5).unwrap(), 0.5);
        assert!(matches!(accuracy(&[0.9], &[1.0, 0.0], 0.5), Err(Error::Dimension(_))));
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(), 0.8);
        let x = [0.1, 0.5, 2.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        assert!(matches!(spearman(&[2.0; 4], &x), Err(Error::UndefinedCorrelation(_))));
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn undefined_is_explicit() {
        let c = correlate(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.pearson, Coefficient::Undefined);
        assert_eq!(serde_json::to_string(&c.pearson).unwrap(), "\"undefined\"");
    }

    #[test]
    fn rouge_n_examples() {
        let s = rouge_n(&toks("the cat sat"), &toks("the cat"), 1).unwrap();
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.precision, 2.0 / 3.0);
        let same = rouge_n(&toks("a b c d"), &toks("a b c d"), 2).unwrap();
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        let none = rouge_n(&toks("a b"), &toks("c d"), 1).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
        assert!(matches!(rouge_n(&toks("a b"), &toks("a"), 2), Err(Error::UndefinedScore(_))));
        // clipping: the candidate repeats "the" more often than the reference
        let clipped = rouge_n(&toks("the the the"), &toks("the cat"), 1).unwrap();
        assert_eq!(clipped.precision, 1.0 / 3.0);
    }

    #[test]
    fn rouge_w_examples() {
        let same = rouge_w(&toks("a b c d e"), &toks("a b c d e"), 1.2).unwrap();
        assert!((same.precision - 1.0).abs() < 1e-12 && (same.recall - 1.0).abs() < 1e-12);
        let none = rouge_w(&toks("a b"), &toks("c d"), 1.2).unwrap();
        assert_eq!(none.f1, 0.0);
        // consecutive matches score higher than the same matches spread out
        let tight = wlcs(&toks("a b c d"), &toks("a b c x"), 2.0);
        let loose = wlcs(&toks("a b c d"), &toks("a x b c"), 2.0);
        assert_eq!(tight, 9.0);
        assert_eq!(loose, 5.0);
    }

    #[test]
    fn multi_reference_takes_componentwise_max() {
        let refs = [toks("a b c d"), toks("a")];
        let s = rouge_max(&toks("a"), &refs, RougeVariant::N { n: 1 }).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
    }
}
