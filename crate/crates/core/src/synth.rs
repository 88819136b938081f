//! Templated generator for the offline demo data.
//!
//! Every document is about one of a dozen topics and takes its objects from
//! that topic's nouns. Names and places are invented per document, so
//! documents on different topics share almost no content words. Verbs and
//! adjectives come from a pool shared within a domain. Sentences are filled
//! templates; a document's reference summary restates its leading sentences
//! with different templates over the same fillers.
//!
//! Two domain styles exist, `news` and `science`. They share topics and slot
//! structure and differ in templates, verbs and adjectives.
//!
//! [`human_fixture`] builds document sets, candidate summaries of graded
//! quality and matching synthetic human scores for the alignment commands.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::corpus::{
    Corpus, DocumentRecord, DocumentSet, HumanScoreRecord, HumanScores, SetCandidate, SetReference, SetSummaries,
    SummaryOrigin, SummaryRecord,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    News,
    Science,
}

impl Style {
    pub fn name(self) -> &'static str {
        match self {
            Style::News => "news",
            Style::Science => "science",
        }
    }

    /// Document templates. Slots: `{n}` name, `{p}` place, `{o}` and `{t}`
    /// topic nouns, `{v}` verb, `{a}` adjective.
    fn body(self) -> &'static [&'static str] {
        match self {
            Style::News => &[
                "{n} {v} the {a} {o} by the {t} in {p} on Monday.",
                "Officials in {p} said {n} {v} a {a} {o} and the {t}.",
                "The {a} {o} that {n} {v} near the {t} drew crowds across {p}.",
                "According to {n}, residents of {p} {v} the {a} {o} beside the {t}.",
                "Critics in {p} argued that {n} {v} the {o} and the {t} too {a}.",
            ],
            Style::Science => &[
                "Researchers at {p} led by {n} {v} a {a} {o} and its {t}.",
                "In controlled trials, {n} {v} the {a} {o} with a {t} near {p}.",
                "The {a} {o} measured at {p} alongside the {t} was {v} by {n}.",
                "Data from {p} suggest that {n} {v} each {a} {o} and {t}.",
                "A team from {p} reported that {n} {v} the {o} and {t} under {a} conditions.",
            ],
        }
    }

    fn summary(self) -> &'static [&'static str] {
        match self {
            Style::News => &[
                "In {p}, {n} {v} a {a} {o} and {t}.",
                "{n} {v} {p}'s {a} {o} and {t}.",
                "A {a} {o} and {t} were {v} by {n} in {p}.",
            ],
            Style::Science => &[
                "{n} at {p} {v} a {a} {o} and {t}.",
                "Study: {n} {v} the {a} {o} and {t} in {p}.",
                "The {a} {o} and {t} from {p} were {v} by {n}.",
            ],
        }
    }

    fn verbs(self) -> &'static [&'static str] {
        match self {
            Style::News => &[
                "unveiled", "criticized", "approved", "delayed", "announced", "defended", "rejected",
                "funded", "launched", "blocked", "praised", "reviewed", "expanded", "cancelled", "sold",
                "inspected", "restored", "closed", "promoted", "questioned",
            ],
            Style::Science => &[
                "measured", "synthesized", "observed", "sequenced", "modelled", "isolated", "calibrated",
                "simulated", "characterized", "quantified", "replicated", "cultured", "imaged", "tested",
                "mapped", "stabilized", "analysed", "detected", "engineered", "compared",
            ],
        }
    }

    fn adjectives(self) -> &'static [&'static str] {
        match self {
            Style::News => &[
                "controversial", "costly", "popular", "historic", "temporary", "local", "massive", "modest",
                "disputed", "annual", "public", "private", "urgent", "rare", "ambitious",
            ],
            Style::Science => &[
                "thermal", "stable", "novel", "synthetic", "dense", "microbial", "optical", "genetic",
                "magnetic", "porous", "fragile", "acidic", "compact", "sensitive", "variable",
            ],
        }
    }
}

const TOPICS: &[[&str; 10]] = &[
    ["harbor", "ferry", "cargo", "dock", "pier", "crane", "vessel", "tugboat", "lighthouse", "freight"],
    ["railway", "locomotive", "platform", "carriage", "timetable", "signal", "junction", "tunnel", "depot", "track"],
    ["harvest", "wheat", "barley", "orchard", "tractor", "irrigation", "livestock", "granary", "pasture", "fertilizer"],
    ["turbine", "reactor", "pipeline", "battery", "grid", "panel", "refinery", "generator", "substation", "fuel"],
    ["hospital", "vaccine", "clinic", "surgeon", "antibiotic", "ward", "pharmacy", "patient", "diagnosis", "therapy"],
    ["school", "curriculum", "teacher", "campus", "lecture", "exam", "scholarship", "library", "classroom", "tuition"],
    ["storm", "rainfall", "drought", "hurricane", "forecast", "flood", "heatwave", "snowfall", "cyclone", "monsoon"],
    ["bank", "bond", "inflation", "currency", "mortgage", "dividend", "loan", "treasury", "budget", "tariff"],
    ["satellite", "rocket", "telescope", "orbit", "asteroid", "probe", "launchpad", "comet", "lander", "spacecraft"],
    ["coral", "reef", "plankton", "whale", "kelp", "estuary", "tide", "sediment", "lagoon", "trawler"],
    ["apartment", "tenant", "landlord", "rent", "zoning", "bricklayer", "skyscraper", "suburb", "renovation", "elevator"],
    ["software", "database", "server", "encryption", "algorithm", "malware", "firmware", "network", "browser", "compiler"],
];

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "kl", "st", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ei"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub documents: usize,
    pub seed: u64,
    /// Inclusive range of body sentences per document.
    pub sentences: (usize, usize),
    /// Inclusive range of summary sentences per document.
    pub summary_sentences: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            documents: 200,
            seed: 2024,
            sentences: (6, 12),
            summary_sentences: (2, 3),
        }
    }
}

struct WordMaker {
    used: HashSet<String>,
}

impl WordMaker {
    fn fresh(&mut self, rng: &mut Rng, capital: bool) -> String {
        loop {
            let syllables = rng.random_range(2..=3);
            let mut w: String = (0..syllables)
                .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
                .collect();
            if rng.random_bool(0.5) {
                w.push(*b"nrsk".choose(rng).unwrap() as char);
            }
            if capital {
                w[..1].make_ascii_uppercase();
            }
            if self.used.insert(w.to_lowercase()) {
                return w;
            }
        }
    }
}

/// Per-document fillers.
struct Cast {
    names: Vec<String>,
    places: Vec<String>,
    objects: Vec<&'static str>,
}

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut s = template.to_string();
    for (k, v) in slots {
        s = s.replace(k, v);
    }
    s
}

type Slots = [String; 6];

fn draw_slots(rng: &mut Rng, cast: &Cast, style: Style) -> Slots {
    let pair: Vec<&&str> = cast.objects.choose_multiple(rng, 2).collect();
    [
        cast.names.choose(rng).unwrap().clone(),
        cast.places.choose(rng).unwrap().clone(),
        pair[0].to_string(),
        pair[1].to_string(),
        style.verbs().choose(rng).unwrap().to_string(),
        style.adjectives().choose(rng).unwrap().to_string(),
    ]
}

fn render(template: &str, s: &Slots) -> String {
    let mut out = fill(
        template,
        &[
            ("{n}", &s[0]),
            ("{p}", &s[1]),
            ("{o}", &s[2]),
            ("{t}", &s[3]),
            ("{v}", &s[4]),
            ("{a}", &s[5]),
        ],
    );
    out[..1].make_ascii_uppercase();
    out
}

/// Generates a corpus of documents alternating between the two styles,
/// each with one reference summary.
pub fn generate_corpus(config: &SynthConfig) -> Result<Corpus> {
    let (lo, hi) = config.sentences;
    let (slo, shi) = config.summary_sentences;
    if lo == 0 || lo > hi || slo == 0 || slo > shi || shi > lo {
        return Err(Error::Config(
            "sentence ranges must be non-empty with summaries no longer than documents".into(),
        ));
    }
    let mut words = WordMaker { used: HashSet::new() };
    for style in [Style::News, Style::Science] {
        for w in style.verbs().iter().chain(style.adjectives()) {
            words.used.insert(w.to_string());
        }
    }
    for w in TOPICS.iter().flatten() {
        words.used.insert(w.to_string());
    }
    let mut docs = Vec::with_capacity(config.documents);
    let mut sums = Vec::with_capacity(config.documents);
    for i in 0..config.documents {
        let doc_id = format!("demo-{:04}", i + 1);
        let mut rng = seeded(derive_seed(config.seed, &doc_id));
        let style = if i % 2 == 0 { Style::News } else { Style::Science };
        let topic = TOPICS.choose(&mut rng).unwrap();
        let cast = Cast {
            names: (0..3).map(|_| words.fresh(&mut rng, true)).collect(),
            places: (0..2).map(|_| words.fresh(&mut rng, true)).collect(),
            objects: topic.choose_multiple(&mut rng, 6).copied().collect(),
        };
        let n = rng.random_range(lo..=hi);
        let fillers: Vec<Slots> = (0..n).map(|_| draw_slots(&mut rng, &cast, style)).collect();
        let sentences: Vec<String> = fillers
            .iter()
            .map(|s| render(style.body().choose(&mut rng).unwrap(), s))
            .collect();
        let k = rng.random_range(slo..=shi);
        let summary: Vec<String> = fillers[..k]
            .iter()
            .map(|s| render(style.summary().choose(&mut rng).unwrap(), s))
            .collect();
        docs.push(DocumentRecord {
            doc_id: doc_id.clone(),
            text: sentences.join(" "),
            sentences,
            domain: style.name().into(),
        });
        sums.push(SummaryRecord {
            summary_id: format!("{doc_id}-ref"),
            doc_id,
            text: summary.join(" "),
            sentences: summary,
            origin: SummaryOrigin::Reference,
        });
    }
    Corpus::new(docs, sums)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureConfig {
    pub sets: usize,
    pub summarizers: usize,
    pub docs_per_set: usize,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            sets: 46,
            summarizers: 43,
            docs_per_set: 4,
            seed: 2010,
        }
    }
}

fn normal(rng: &mut Rng, sigma: f64) -> f64 {
    Normal::new(0.0, sigma).expect("sigma is positive").sample(rng)
}

/// Document sets over `corpus`, one reference per set, and one candidate per
/// (set, summarizer). Each summarizer has a latent quality; its candidates
/// are the set reference with a matching share of words swapped for words
/// from unrelated documents, and its human scores are noisy functions of the
/// same quality.
pub fn human_fixture(corpus: &Corpus, config: &FixtureConfig) -> Result<(HumanScores, SetSummaries)> {
    if corpus.len() < config.docs_per_set || config.docs_per_set == 0 {
        return Err(Error::InsufficientData(format!(
            "{} documents cannot fill sets of {}",
            corpus.len(),
            config.docs_per_set
        )));
    }
    let mut rng = seeded(config.seed);
    let ids = corpus.doc_ids();
    let filler: Vec<&str> = corpus
        .reference_summaries()
        .flat_map(|s| s.text.split_whitespace())
        .filter(|w| w.chars().all(|c| c.is_ascii_alphabetic()))
        .collect();
    let quality: Vec<f64> = (0..config.summarizers)
        .map(|m| 0.15 + 0.8 * m as f64 / (config.summarizers.max(2) - 1) as f64)
        .collect();
    let mut human = HumanScores::default();
    let mut summaries = SetSummaries::default();
    for s in 0..config.sets {
        let set_id = format!("D{:04}", 1001 + s);
        let doc_ids: Vec<String> = ids.choose_multiple(&mut rng, config.docs_per_set).cloned().collect();
        let reference = doc_ids
            .iter()
            .map(|id| corpus.reference_for(id).map(|r| r.sentences[0].clone()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InsufficientData("document without reference summary".into()))?
            .join(" ");
        for (m, &q) in quality.iter().enumerate() {
            let q_here = (q + normal(&mut rng, 0.05)).clamp(0.0, 1.0);
            let text: Vec<String> = reference
                .split_whitespace()
                .map(|w| {
                    if rng.random_bool(1.0 - q_here) {
                        filler.choose(&mut rng).unwrap().to_string()
                    } else {
                        w.to_string()
                    }
                })
                .collect();
            let summarizer_id = (m + 1).to_string();
            summaries.candidates.push(SetCandidate {
                set_id: set_id.clone(),
                summarizer_id: summarizer_id.clone(),
                text: text.join(" "),
            });
            let modified_pyramid = (q_here + normal(&mut rng, 0.05)).clamp(0.0, 1.0);
            human.records.push(HumanScoreRecord {
                set_id: set_id.clone(),
                summarizer_id,
                modified_pyramid,
                linguistic_quality: (1.0 + 4.0 * q_here + normal(&mut rng, 0.6)).clamp(1.0, 5.0),
                overall: (1.0 + 4.0 * q_here + normal(&mut rng, 0.4)).clamp(1.0, 5.0),
                pyramid: Some((modified_pyramid + normal(&mut rng, 0.02)).clamp(0.0, 1.0)),
            });
        }
        summaries.references.push(SetReference {
            set_id: set_id.clone(),
            text: reference,
        });
        human.doc_sets.push(DocumentSet { set_id, doc_ids });
    }
    Ok((human, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{split_sentences, tokenize};

    fn content(text: &str) -> HashSet<String> {
        const FUNCTION: &[&str] = &[
            "the", "a", "in", "on", "of", "at", "by", "that", "was", "were", "to", "too", "each", "from", "near", "under",
            "with", "and", "its", "beside",
        ];
        tokenize(text)
            .into_iter()
            .map(|t| t.to_lowercase())
            .filter(|t| t.chars().all(char::is_alphabetic) && !FUNCTION.contains(&t.as_str()))
            .collect()
    }

    #[test]
    fn generation_is_seeded() {
        let c = SynthConfig {
            documents: 20,
            ..Default::default()
        };
        assert_eq!(generate_corpus(&c).unwrap(), generate_corpus(&c).unwrap());
    }

    #[test]
    fn sentences_survive_resplitting() {
        let c = generate_corpus(&SynthConfig {
            documents: 30,
            ..Default::default()
        })
        .unwrap();
        for d in c.documents() {
            assert_eq!(split_sentences(&d.text), d.sentences, "{}", d.doc_id);
        }
    }

    #[test]
    fn positives_overlap_negatives_do_not() {
        let c = generate_corpus(&SynthConfig::default()).unwrap();
        let docs = c.documents();
        let mut cross = Vec::new();
        for (i, d) in docs.iter().enumerate() {
            let dw = content(&d.text);
            let own = content(&c.reference_for(&d.doc_id).unwrap().text);
            let shared = own.iter().filter(|w| dw.contains(*w)).count() as f64 / own.len() as f64;
            assert!(shared >= 0.6, "{}: {shared}", d.doc_id);
            let other = content(&c.reference_for(&docs[(i + 1) % docs.len()].doc_id).unwrap().text);
            cross.push(other.iter().filter(|w| dw.contains(*w)).count() as f64 / other.len() as f64);
        }
        let mean = cross.iter().sum::<f64>() / cross.len() as f64;
        assert!(mean < 0.1, "mean cross overlap {mean}");
    }

    #[test]
    fn fixture_shape() {
        let c = generate_corpus(&SynthConfig {
            documents: 40,
            ..Default::default()
        })
        .unwrap();
        let (h, s) = human_fixture(&c, &FixtureConfig::default()).unwrap();
        assert_eq!(h.doc_sets.len(), 46);
        assert_eq!(h.records.len(), 46 * 43);
        assert_eq!(s.candidates.len(), 46 * 43);
        assert_eq!(s.references.len(), 46);
    }
}
