use rand::Rng as _;
use refscore::corpus::*;
use refscore::encoder::*;
use refscore::evalharness::*;
use refscore::metrics::{Coefficient, STANDARD_VARIANTS};
use refscore::model::*;
use refscore::rng::seeded;
use refscore::sampler::*;
use refscore::synth::*;
use refscore::textproc::*;
use refscore::Result;

const TWENTY: [&str; 20] = [
    "The committee met on Monday.",
    "Dr. Alvarez opened the session with a short statement.",
    "She said the budget was approx. 4.5 million dollars.",
    "\"We are on track,\" she added.",
    "Is that realistic?",
    "Several members were not convinced!",
    "Mr. Okafor asked about the U.S. office.",
    "It closed in Jan. and reopened later.",
    "Figures (see Fig. 2) show a steady rise.",
    "The vote was postponed.",
    "Observers expected this outcome.",
    "A second meeting is planned for next week.",
    "Staff will prepare a revised draft.",
    "Comments are due by Friday.",
    "The chair thanked everyone.",
    "Attendance was high.",
    "Coffee ran out early.",
    "Nobody seemed to mind.",
    "The minutes will be published online.",
    "That concluded the meeting.",
];

#[test]
fn twenty_sentence_fixture_splits_and_tokenizes_consistently() {
    let text = TWENTY.join(" ");
    let sentences = split_sentences(&text);
    assert_eq!(sentences, TWENTY);
    let tokens = tokenize(&text);
    let per_sentence: Vec<String> = TWENTY.iter().flat_map(|s| tokenize(s)).collect();
    assert_eq!(tokens, per_sentence);
    let regrouped = split_token_sentences(&tokens);
    assert_eq!(regrouped.len(), 20);
    for (group, s) in regrouped.iter().zip(TWENTY) {
        assert_eq!(group, &tokenize(s));
    }
}

fn small_corpus() -> Corpus {
    generate_corpus(&SynthConfig { documents: 40, ..Default::default() }).unwrap()
}

#[test]
fn corpus_and_fixture_files_round_trip() {
    let corpus = small_corpus();
    let (human, summaries) = human_fixture(&corpus, &FixtureConfig { sets: 5, summarizers: 4, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (c, h, s) = (dir.path().join("c.jsonl"), dir.path().join("h.jsonl"), dir.path().join("s.jsonl"));
    corpus.save(&c).unwrap();
    human.save(&h).unwrap();
    summaries.save(&s).unwrap();
    assert_eq!(load_corpus(&c).unwrap(), corpus);
    assert_eq!(load_human_scores(&h).unwrap(), human);
    let back = load_set_summaries(&s).unwrap();
    assert_eq!(back.candidates, summaries.candidates);
    assert_eq!(back.references, summaries.references);
}

fn tiny_model(corpus: &Corpus, seed: u64) -> TrainedScorer {
    let split = make_splits(corpus, DEFAULT_FRACTIONS, 1).unwrap();
    let vocab = build_vocabulary(corpus, Some(&split.train)).unwrap();
    let cfg = SamplerConfig { negatives_per_article: 2, ..Default::default() };
    let tr = build_training_set(corpus, &split.train, Method::Crosspair, &vocab, &cfg).unwrap();
    let va = build_training_set(corpus, &split.validation, Method::Crosspair, &vocab, &cfg).unwrap();
    let binding = EncoderBinding::hashed(8, 0, PaddingPolicy::sentence(4, 3)).unwrap();
    let mut tc = TrainConfig::new(Loss::Bce, seed);
    tc.max_epochs = 4;
    train(corpus, &tr, &va, &binding, HeadConfig::new(HeadKind::FcOnly), &tc).unwrap()
}

#[test]
fn training_does_not_depend_on_thread_count() {
    let corpus = small_corpus();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| tiny_model(&corpus, 5))
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.head().params, four.head().params);
    assert_eq!(one.history(), four.history());
}

#[test]
fn saved_models_predict_identically() {
    let corpus = small_corpus();
    let model = tiny_model(&corpus, 6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rsqm");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    for d in corpus.documents().iter().take(10) {
        let s = TokenSequence::from_text(&corpus.reference_for(&d.doc_id).unwrap().text, "x");
        let p = model.predict(d, &s).unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(p.to_bits(), back.predict(d, &s).unwrap().to_bits());
    }
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_model(&path), Err(refscore::Error::IncompatibleModel(_))));
}

/// Scores each document in a set with `overall / |D|` of the candidate's
/// human judgment, plus seeded Gaussian noise.
struct HumanProxy<'a> {
    human: &'a HumanScores,
    sigma: f64,
}

impl PairScorer for HumanProxy<'_> {
    fn score(&self, doc: &DocumentRecord, summary: &TokenSequence) -> Result<f64> {
        let (set_id, summarizer) = summary.source_id.split_once('/').unwrap();
        let rec = self
            .human
            .records
            .iter()
            .find(|r| r.set_id == set_id && r.summarizer_id == summarizer)
            .unwrap();
        let size = self.human.doc_set(set_id).unwrap().doc_ids.len() as f64;
        let mut rng = seeded(refscore::rng::stable_hash(3, format!("{}{}", summary.source_id, doc.doc_id).as_bytes()));
        let noise: f64 = rand_distr::Distribution::sample(&rand_distr::Normal::new(0.0, self.sigma).unwrap(), &mut rng);
        Ok(rec.overall / size + noise)
    }

    fn identity(&self) -> String {
        "human-proxy".into()
    }
}

#[test]
fn alignment_recovers_a_noisy_human_proxy() {
    let corpus = generate_corpus(&SynthConfig::default()).unwrap();
    let (human, summaries) = human_fixture(&corpus, &FixtureConfig::default()).unwrap();
    let proxy = HumanProxy { human: &human, sigma: 0.01 };
    let report = align_with_humans(&proxy, &corpus, &human, &summaries, &[], &AlignOptions::default()).unwrap();
    assert_eq!(report.pairs, 46 * 43);
    let overall = report.model.unwrap().overall;
    assert!(overall.spearman.value().unwrap() >= 0.99, "{:?}", overall);

    let mut shuffled = human.clone();
    let mut rng = seeded(1);
    for i in (1..shuffled.records.len()).rev() {
        shuffled.records.swap(i, rng.random_range(0..=i));
    }
    let again = align_with_humans(&proxy, &corpus, &shuffled, &summaries, &[], &AlignOptions::default()).unwrap();
    assert_eq!(again.to_json(), align_with_humans(&proxy, &corpus, &human, &summaries, &[], &AlignOptions::default()).unwrap().to_json());
}

#[test]
fn set_score_is_additive_over_disjoint_sets() {
    let corpus = small_corpus();
    let model = tiny_model(&corpus, 7);
    let ids = corpus.doc_ids();
    let summary = TokenSequence::from_text("A short summary about nothing in particular.", "s");
    let set = |ids: &[String]| DocumentSet { set_id: "x".into(), doc_ids: ids.to_vec() };
    let whole = set_score(&model, &corpus, &set(&ids[..10]), &summary).unwrap();
    let parts = set_score(&model, &corpus, &set(&ids[..4]), &summary).unwrap()
        + set_score(&model, &corpus, &set(&ids[4..10]), &summary).unwrap();
    let looped: f64 = ids[..10].iter().map(|id| model.predict(corpus.document(id).unwrap(), &summary).unwrap()).sum();
    assert!((whole - parts).abs() < 1e-9);
    assert!((whole - looped).abs() < 1e-9);
    assert!((0.0..=10.0).contains(&whole));
}

#[test]
fn rouge_baseline_has_twelve_rows() {
    let corpus = small_corpus();
    let (human, summaries) = human_fixture(&corpus, &FixtureConfig { sets: 8, summarizers: 6, ..Default::default() }).unwrap();
    let report = rouge_baseline(&human, &summaries, &STANDARD_VARIANTS, &AlignOptions::default()).unwrap();
    let names: Vec<_> = report.rouge.iter().map(|r| r.system.as_str()).collect();
    assert_eq!(names.len(), 12);
    assert_eq!(names[0], "ROUGE-1 P");
    assert_eq!(names[11], "ROUGE-W-1.2 F");
}

#[test]
fn constant_scorer_yields_undefined_cells() {
    struct Half;
    impl PairScorer for Half {
        fn score(&self, _: &DocumentRecord, _: &TokenSequence) -> Result<f64> {
            Ok(0.5)
        }
        fn identity(&self) -> String {
            "half".into()
        }
    }
    let corpus = small_corpus();
    let (human, summaries) = human_fixture(&corpus, &FixtureConfig { sets: 4, summarizers: 5, ..Default::default() }).unwrap();
    let report = align_with_humans(&Half, &corpus, &human, &summaries, &[], &AlignOptions::default()).unwrap();
    let row = report.model.unwrap();
    for t in ScoreType::ALL {
        assert_eq!(row.get(t).pearson, Coefficient::Undefined);
    }
}
