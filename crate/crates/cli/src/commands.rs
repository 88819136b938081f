use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use refscore::corpus::{
    load_corpus_with, load_human_scores, load_set_summaries, make_splits, Corpus, DocumentRecord, SplitAssignment,
};
use refscore::encoder::{
    compute_padding_limits, load_precomputed, load_word_table, EncoderBinding, EncoderKind, PaddingPolicy, Unit,
};
use refscore::evalharness::{
    align_with_humans, cross_domain_matrix, evaluate, predict_all, rouge_baseline, AlignOptions, EvalSet, Task,
};
use refscore::model::{load_model, save_model, PairScorer, TrainedScorer};
use refscore::rng::derive_seed;
use refscore::sampler::{build_training_set, label_histogram, read_samples, write_samples, LabeledSample, Method};
use refscore::synth::{generate_corpus, human_fixture, FixtureConfig, SynthConfig};
use refscore::textproc::{build_vocabulary, Abbreviations, TokenSequence};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::fail::{CliError, CliResult};
use crate::output::{display_rel, produce_atomic, sha256_file, write_atomic, write_json, Outputs};

pub const SPLITS: [&str; 3] = ["train", "validation", "test"];

/// A loaded config plus the switches given on the command line.
pub struct Run {
    pub cfg: RunConfig,
    pub out: Outputs,
    /// Directory of the config file; manifest paths are written relative to it.
    pub base: PathBuf,
    pub deterministic: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitManifest {
    documents: usize,
    samples: usize,
    label_histogram: BTreeMap<String, usize>,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SamplesManifest {
    command: String,
    seed: u64,
    deterministic: bool,
    method: Method,
    corpus: String,
    corpus_sha256: String,
    corpus_documents: usize,
    splits: BTreeMap<String, SplitManifest>,
}

impl Run {
    pub fn new(cfg: RunConfig, base: PathBuf, deterministic: bool) -> Self {
        let out = Outputs { dir: cfg.output.dir.clone() };
        Self { cfg, out, base, deterministic }
    }

    fn seed(&self, purpose: &str) -> u64 {
        derive_seed(self.cfg.seed, purpose)
    }

    pub fn corpus(&self) -> CliResult<Corpus> {
        let c = &self.cfg.corpus;
        let abbrevs = match &c.abbreviations {
            Some(p) => Abbreviations::from_file(p)?,
            None => Abbreviations::builtin().clone(),
        };
        let corpus = load_corpus_with(&c.path, &abbrevs)?;
        Ok(match c.max_documents {
            Some(n) if n < corpus.len() => corpus.sample_documents(n, self.seed("corpus"))?,
            _ => corpus,
        })
    }

    fn split(&self, corpus: &Corpus) -> CliResult<SplitAssignment> {
        Ok(make_splits(corpus, self.cfg.corpus.fractions, self.seed("split"))?)
    }

    /// Encoder binding whose padding limits come from the config or, when
    /// absent, from the training documents.
    fn binding(&self, corpus: &Corpus, train_ids: &[String]) -> CliResult<EncoderBinding> {
        let e = &self.cfg.encoder;
        let policy = match e.unit {
            Unit::JointToken => PaddingPolicy::joint(e.joint_budget),
            unit => {
                let measured = match (e.doc_limit, e.summary_limit) {
                    (Some(_), Some(_)) => None,
                    _ => Some(compute_padding_limits(&corpus.subset(train_ids)?, e.quantile, unit)?),
                };
                let pick = |given: Option<usize>, f: fn(&PaddingPolicy) -> usize| {
                    given.unwrap_or_else(|| f(measured.as_ref().expect("measured when a limit is missing")))
                };
                PaddingPolicy {
                    unit,
                    doc_limit: pick(e.doc_limit, |p| p.doc_limit),
                    summary_limit: pick(e.summary_limit, |p| p.summary_limit),
                    ..PaddingPolicy::joint(e.joint_budget)
                }
            }
        };
        let path = || {
            e.path
                .clone()
                .ok_or_else(|| CliError::config(format!("encoder kind {:?} needs a path", e.kind)))
        };
        let binding = match e.kind {
            EncoderKind::HashedTest => EncoderBinding::hashed(e.dimension, e.seed.unwrap_or(self.cfg.seed), policy)?,
            EncoderKind::WordTable => load_word_table(&path()?)?.with_policy(policy)?,
            EncoderKind::Precomputed => load_precomputed(&path()?)?.with_policy(policy)?,
            EncoderKind::ExternalSentence | EncoderKind::ExternalJoint => {
                return Err(CliError::config(
                    "external encoders attach in-process; export them to a precomputed sidecar for the CLI",
                ))
            }
        };
        Ok(binding)
    }

    fn read_manifest(&self) -> CliResult<SamplesManifest> {
        let path = self.out.samples_manifest();
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::data(format!("{}: {e}; run gen-samples first", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    fn read_split(&self) -> CliResult<SplitAssignment> {
        let path = self.out.dir.join("samples").join("split.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::data(format!("{}: {e}; run gen-samples first", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    fn samples(&self, split: &str) -> CliResult<Vec<LabeledSample>> {
        Ok(read_samples(&self.out.samples(split))?)
    }

    fn model_path(&self, given: Option<&Path>) -> PathBuf {
        given.map(Path::to_path_buf).unwrap_or_else(|| self.out.model())
    }

    fn align_inputs(&self) -> CliResult<(refscore::corpus::HumanScores, refscore::corpus::SetSummaries, AlignOptions)> {
        let e = &self.cfg.eval;
        let need = |p: &Option<PathBuf>, key: &str| {
            p.clone().ok_or_else(|| CliError::config(format!("[eval] {key} is required")))
        };
        let human = load_human_scores(&need(&e.human_scores, "human_scores")?)?;
        let sets = load_set_summaries(&need(&e.set_summaries, "set_summaries")?)?;
        let options = AlignOptions {
            allow_partial: e.allow_partial,
            exclude_summarizers: e.exclude_summarizers.clone(),
        };
        Ok((human, sets, options))
    }

    fn write_report(&self, name: &str, json: &str, table: &str) -> CliResult<()> {
        write_atomic(&self.out.report(name, "json"), json.as_bytes())?;
        write_atomic(&self.out.report(name, "txt"), table.as_bytes())
    }
}

fn build_split_samples(
    run: &Run,
    corpus: &Corpus,
    split: &SplitAssignment,
    method: Method,
) -> CliResult<[Vec<LabeledSample>; 3]> {
    let vocab = build_vocabulary(corpus, Some(&split.train))?;
    let s = &run.cfg.sampler;
    let train = build_training_set(corpus, &split.train, method, &vocab, &s.training(run.seed("samples/train")))?;
    let validation =
        build_training_set(corpus, &split.validation, method, &vocab, &s.training(run.seed("samples/validation")))?;
    let test = build_training_set(corpus, &split.test, method, &vocab, &s.test(run.seed("samples/test")))?;
    Ok([train, validation, test])
}

pub fn gen_samples(run: &Run, method: Option<Method>) -> CliResult<String> {
    let method = method.unwrap_or(run.cfg.sampler.method);
    let corpus = run.corpus()?;
    let split = run.split(&corpus)?;
    let sets = build_split_samples(run, &corpus, &split, method)?;
    write_atomic(&run.out.dir.join("samples").join("split.json"), (split.to_json() + "\n").as_bytes())?;
    let mut splits = BTreeMap::new();
    for ((name, samples), ids) in SPLITS.iter().zip(&sets).zip([&split.train, &split.validation, &split.test]) {
        let path = run.out.samples(name);
        produce_atomic(&path, |p| write_samples(p, samples))?;
        splits.insert(
            name.to_string(),
            SplitManifest {
                documents: ids.len(),
                samples: samples.len(),
                label_histogram: label_histogram(samples),
                sha256: sha256_file(&path)?,
            },
        );
    }
    let manifest = SamplesManifest {
        command: "gen-samples".into(),
        seed: run.cfg.seed,
        deterministic: run.deterministic,
        method,
        corpus: display_rel(&run.cfg.corpus.path, &run.base),
        corpus_sha256: sha256_file(&run.cfg.corpus.path)?,
        corpus_documents: corpus.len(),
        splits,
    };
    write_json(&run.out.samples_manifest(), &manifest)?;
    let sizes: Vec<String> = SPLITS
        .iter()
        .map(|s| format!("{s} {}", manifest.splits[*s].samples))
        .collect();
    Ok(format!("{method} samples: {}", sizes.join(", ")))
}

#[derive(Serialize)]
struct TrainManifest<'a> {
    command: &'a str,
    seed: u64,
    deterministic: bool,
    method: Method,
    encoder: String,
    head: refscore::model::HeadConfig,
    train_config: &'a refscore::model::TrainConfig,
    epochs_run: usize,
    best_epoch: usize,
    model_sha256: String,
}

fn fit(run: &Run, corpus: &Corpus, train_ids: &[String], method: Method, sets: &[Vec<LabeledSample>]) -> CliResult<TrainedScorer> {
    let binding = run.binding(corpus, train_ids)?;
    let head = run.cfg.model.head_config(binding.policy().unit);
    let tc = run.cfg.model.train_config(method, run.seed("train"));
    Ok(refscore::model::train(corpus, &sets[0], &sets[1], &binding, head, &tc)?)
}

pub fn train(run: &Run) -> CliResult<String> {
    let manifest = run.read_manifest()?;
    let corpus = run.corpus()?;
    let split = run.read_split()?;
    let sets = [run.samples("train")?, run.samples("validation")?];
    let scorer = fit(run, &corpus, &split.train, manifest.method, &sets)?;
    let model = run.out.model();
    produce_atomic(&model, |p| save_model(&scorer, p))?;
    write_json(&run.out.report("history", "json"), &scorer.history())?;
    write_json(
        &run.out.report("train.manifest", "json"),
        &TrainManifest {
            command: "train",
            seed: run.cfg.seed,
            deterministic: run.deterministic,
            method: manifest.method,
            encoder: scorer.binding().identity(),
            head: scorer.head().config,
            train_config: scorer.train_config(),
            epochs_run: scorer.history().len(),
            best_epoch: scorer.best_epoch(),
            model_sha256: sha256_file(&model)?,
        },
    )?;
    let last = scorer.history()[scorer.best_epoch().max(1) - 1];
    Ok(format!(
        "trained {} for {} epochs, kept epoch {} (val loss {:.5})",
        scorer.identity(),
        scorer.history().len(),
        scorer.best_epoch(),
        last.val_loss
    ))
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    doc_id: &'a str,
    summary: String,
    label: f64,
    score: f64,
}

pub fn eval(run: &Run, model: Option<&Path>) -> CliResult<String> {
    let scorer = load_model(&run.model_path(model))?;
    let corpus = run.corpus()?;
    let test = run.samples("test")?;
    let report = evaluate(&scorer, EvalSet { name: "test", corpus: &corpus, samples: &test }, Task::infer(&test))?;
    let scores = predict_all(&scorer, &corpus, &test)?;
    let mut lines = Vec::new();
    for (s, score) in test.iter().zip(scores) {
        let line = PredictionLine {
            doc_id: &s.doc_id,
            summary: s.summary_tokens.joined(),
            label: s.label,
            score,
        };
        serde_json::to_writer(&mut lines, &line).map_err(|e| CliError::runtime(e.to_string()))?;
        lines.push(b'\n');
    }
    write_atomic(&run.out.report("predictions", "jsonl"), &lines)?;
    run.write_report("eval", &report.to_json(), &report.to_table())?;
    Ok(report.to_table())
}

pub fn cross_domain(run: &Run) -> CliResult<String> {
    let corpus = run.corpus()?;
    let method = run.cfg.sampler.method;
    if !method.is_binary() {
        return Err(CliError::config("cross-domain compares accuracies and needs method = \"crosspair\""));
    }
    let domains: Vec<String> = if run.cfg.eval.domains.is_empty() {
        corpus.documents().iter().map(|d| d.domain.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        run.cfg.eval.domains.clone()
    };
    let mut parts = Vec::new();
    for domain in &domains {
        let ids: Vec<String> = corpus.documents().iter().filter(|d| &d.domain == domain).map(|d| d.doc_id.clone()).collect();
        if ids.is_empty() {
            return Err(CliError::data(format!("no documents in domain \"{domain}\"")));
        }
        let sub = corpus.subset(&ids)?;
        let split = run.split(&sub)?;
        let sets = build_split_samples(run, &sub, &split, method)?;
        let scorer = fit(run, &sub, &split.train, method, &sets[..2])?;
        produce_atomic(&run.out.dir.join("cross_domain").join(format!("{domain}.rsqm")), |p| save_model(&scorer, p))?;
        let [_, _, test] = sets;
        parts.push((domain.clone(), sub, scorer, test));
    }
    let scorers: Vec<(&str, &dyn PairScorer)> = parts.iter().map(|(d, _, s, _)| (d.as_str(), s as &dyn PairScorer)).collect();
    let targets: Vec<EvalSet> = parts
        .iter()
        .map(|(d, c, _, t)| EvalSet { name: d, corpus: c, samples: t })
        .collect();
    let report = cross_domain_matrix(&scorers, &targets)?;
    run.write_report("cross_domain", &report.to_json(), &report.to_table())?;
    Ok(report.to_table())
}

pub fn align(run: &Run, model: Option<&Path>) -> CliResult<String> {
    let scorer = load_model(&run.model_path(model))?;
    let corpus = run.corpus()?;
    let (human, sets, options) = run.align_inputs()?;
    let variants = if run.cfg.eval.rouge_baseline { run.cfg.eval.rouge_variants.clone() } else { Vec::new() };
    let report = align_with_humans(&scorer, &corpus, &human, &sets, &variants, &options)?;
    run.write_report("align", &report.to_json(), &report.to_table())?;
    Ok(report.to_table())
}

pub fn rouge(run: &Run) -> CliResult<String> {
    let (human, sets, options) = run.align_inputs()?;
    let report = rouge_baseline(&human, &sets, &run.cfg.eval.rouge_variants, &options)?;
    run.write_report("rouge", &report.to_json(), &report.to_table())?;
    Ok(report.to_table())
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn score_pair(scorer: &TrainedScorer, doc: &str, summary: &str, source: String) -> CliResult<f64> {
    if doc.trim().is_empty() {
        return Err(refscore::Error::DegenerateInput(format!("{source}: document is empty")).into());
    }
    let summary = TokenSequence::from_text(summary, source.clone());
    if summary.is_empty() {
        return Err(refscore::Error::DegenerateInput(format!("{source}: summary is empty")).into());
    }
    Ok(scorer.predict(&DocumentRecord::new(source, doc, ""), &summary)?)
}

/// One `{"doc": …, "summary": …}` object per line of a batch file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchLine {
    #[serde(default)]
    id: Option<String>,
    doc: String,
    summary: String,
}

pub enum ScoreInput<'a> {
    Pair { doc: &'a Path, summary: &'a Path },
    Batch(&'a Path),
}

pub fn score(model: &Path, input: ScoreInput, out: &mut impl Write) -> CliResult<()> {
    let scorer = load_model(model)?;
    let emit = |out: &mut dyn Write, v: f64| writeln!(out, "{v:.6}").map_err(|e| CliError::runtime(e.to_string()));
    match input {
        ScoreInput::Pair { doc, summary } => {
            let v = score_pair(&scorer, &read_text(doc)?, &read_text(summary)?, "input".into())?;
            emit(out, v)
        }
        ScoreInput::Batch(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
            let mut pairs = Vec::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| CliError::runtime(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let b: BatchLine = serde_json::from_str(&line).map_err(|e| refscore::Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                pairs.push((b.id.unwrap_or_else(|| format!("line {}", i + 1)), b.doc, b.summary));
            }
            use rayon::prelude::*;
            let scores: Vec<f64> = pairs
                .par_iter()
                .map(|(id, d, s)| score_pair(&scorer, d, s, id.clone()))
                .collect::<CliResult<_>>()?;
            for v in scores {
                emit(out, v)?;
            }
            Ok(())
        }
    }
}

/// Writes the synthetic demo corpus and its human-judgment fixture.
pub fn gen_demo(dir: &Path, documents: usize, seed: Option<u64>) -> CliResult<String> {
    let synth = SynthConfig {
        documents,
        seed: seed.unwrap_or(SynthConfig::default().seed),
        ..Default::default()
    };
    let corpus = generate_corpus(&synth)?;
    let (human, sets) = human_fixture(&corpus, &FixtureConfig::default())?;
    produce_atomic(&dir.join("corpus.jsonl"), |p| corpus.save(p))?;
    produce_atomic(&dir.join("human_scores.jsonl"), |p| human.save(p))?;
    produce_atomic(&dir.join("set_summaries.jsonl"), |p| sets.save(p))?;
    Ok(format!(
        "wrote {} documents, {} document sets, {} judged candidates to {}",
        corpus.len(),
        human.doc_sets.len(),
        human.records.len(),
        dir.display()
    ))
}
