//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report prints in order. The
//! process fails if any checkable criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use kgreview::background::{build_index, load_index, save_index, tfidf, tfidf_score, BackgroundIndex};
use kgreview::corpus::{load_corpus, Category};
use kgreview::evidence::{
    extract_evidence, extract_novelty, novelty_timeline, recommend_related, FeatureVector, FEATURE_DIM, RECOMMENDATIONS,
    TFIDF_THRESHOLD,
};
use kgreview::kg::{build_kg, main_scope};
use kgreview::review::{generate_generic, select_polarity, Polarity, TemplateSet};
use kgreview::scoring::gradcheck::{grad_check, Fault, TOLERANCE};
use kgreview::scoring::io::{model_from_bytes, model_to_bytes};
use kgreview::scoring::train::accuracy;
use kgreview::scoring::{load_model, save_model, train, TrainConfig, TrainExample};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MERGE_PAPERS: usize = 100;
const MERGE_BUDGET: Duration = Duration::from_secs(10);
const NOVELTY_INSTANCES: usize = 100;
const NOVELTY_BACKGROUND: usize = 20;
const NOVELTY_BUDGET: Duration = Duration::from_secs(30);
const MONOTONE_BUDGET: Duration = Duration::from_secs(5);
const TFIDF_CASES: usize = 1000;
const TFIDF_TOLERANCE: f64 = 1e-12;
const GRAD_SEEDS: u64 = 20;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const LEARN_EXAMPLES: usize = 500;
const LEARN_EPOCHS: usize = 50;
const LEARN_TARGET: f64 = 0.95;
const LEARN_BUDGET: Duration = Duration::from_secs(120);
const RECOMMEND_INSTANCES: usize = 1000;
const SCORE_RANGE: std::ops::RangeInclusive<u8> = 1..=5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(budget: Duration, start: Instant) -> (bool, String) {
    let spent = start.elapsed();
    (spent < budget, format!("{:.2}s of {}s", spent.as_secs_f64(), budget.as_secs()))
}

fn headline_results() -> Outcome {
    outcome(
        false,
        "headline accuracy, MSE and comment-validity figures are not reproduced: they need the original \
         review corpus and information-extraction model; criteria 2-11 are the substitutes",
    )
}

fn merge_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let all_sections = kgreview::corpus::SectionKind::ALL.into_iter().collect::<BTreeSet<_>>();
    let mut mismatches = 0;
    let mut entities = 0;
    for i in 0..MERGE_PAPERS {
        let paper = random_paper(&mut rng, &format!("R{i:03}"), 2010, Shape::default());
        for scope in [&main_scope(), &all_sections] {
            let graph = build_kg(&paper, scope);
            let got: BTreeSet<BTreeSet<usize>> =
                graph.entities.iter().map(|e| e.mentions.iter().map(|m| m.mention_id).collect()).collect();
            entities += got.len();
            let want = oracle_partition(&paper, scope);
            let reps_ok = graph.entities.iter().all(|e| {
                let refs: Vec<_> = e.mentions.iter().collect();
                oracle_normalize(&oracle_representative(&refs).surface) == e.representative.tokens()
            });
            if got != want || !reps_ok {
                mismatches += 1;
            }
        }
    }
    let (fast, time) = within(MERGE_BUDGET, start);
    outcome(
        mismatches == 0 && fast,
        format!("{MERGE_PAPERS} papers x 2 scopes, {entities} entities, {mismatches} mismatches, {time}"),
    )
}

fn novelty_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut new_total = 0;
    for _ in 0..NOVELTY_INSTANCES {
        let (target, background) = random_instance(&mut rng, NOVELTY_BACKGROUND, Shape::default());
        let cutoff = rng.gen_range(2001..=2010);
        let index = build_index(&background, cutoff);
        let gp = build_kg(&target, &main_scope());
        let got = extract_novelty(&gp, &index);
        let want = oracle_novelty(&gp, &with_graphs(&background), cutoff);
        new_total += got.len();
        if got != want {
            mismatches += 1;
        }
    }
    let (fast, time) = within(NOVELTY_BUDGET, start);
    outcome(
        mismatches == 0 && fast,
        format!("{NOVELTY_INSTANCES} instances, {new_total} new elements, {mismatches} mismatches, {time}"),
    )
}

fn anti_monotone() -> Outcome {
    let start = Instant::now();
    let mut corpora = vec![load_corpus(toy_dir().join("papers")).expect("toy corpus")];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for c in 0..10 {
        let papers = (0..12)
            .map(|i| {
                let year = rng.gen_range(2005..2015);
                random_paper(&mut rng, &format!("C{c}P{i:02}"), year, Shape::default())
            })
            .collect();
        corpora.push(papers);
    }
    let mut violations = 0;
    let mut pairs = 0;
    for corpus in &corpora {
        let lo = corpus.iter().map(|p| p.year).min().unwrap() - 1;
        let hi = corpus.iter().map(|p| p.year).max().unwrap() + 1;
        let years: Vec<i32> = (lo..=hi).collect();
        let timeline = novelty_timeline(corpus, corpus, &years).expect("increasing years");
        for w in timeline.entries.windows(2) {
            pairs += 1;
            if w[1].1 > w[0].1 {
                violations += 1;
            }
        }
    }
    let (fast, time) = within(MONOTONE_BUDGET, start);
    outcome(
        violations == 0 && fast,
        format!("{} corpora, {pairs} consecutive cutoff pairs, {violations} increases, {time}", corpora.len()),
    )
}

fn tfidf_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..TFIDF_CASES {
        let n = rng.gen_range(0..=60);
        let df = rng.gen_range(0..=n);
        let max_tf = rng.gen_range(1..=12);
        let tf = rng.gen_range(1..=max_tf);
        worst = worst.max((tfidf_score(tf, max_tf, n, df) - oracle_tfidf(tf, max_tf, n, df)).abs());
    }

    // end to end: graph tf, brute-force df, and the comparison threshold
    let mut e2e_worst: f64 = 0.0;
    let mut entries = 0;
    let mut below = 0;
    for _ in 0..100 {
        let (target, background) = random_instance(&mut rng, 12, Shape::default());
        let index = build_index(&background, 2010);
        let gp = build_kg(&target, &main_scope());
        let graphs = with_graphs(&background);
        let max_tf = gp.elements().iter().filter_map(|k| gp.mention_count(k)).max().unwrap_or(0);
        for key in gp.elements() {
            let df = oracle_matched_papers(&key, &graphs, 2010).len();
            let want = oracle_tfidf(gp.mention_count(&key).unwrap(), max_tf, background.len(), df);
            e2e_worst = e2e_worst.max((tfidf(&index, &key, &gp).unwrap() - want).abs());
        }
        let bundle = extract_evidence(&target, &index);
        for entry in &bundle.comparison {
            entries += 1;
            if entry.tfidf.partial_cmp(&TFIDF_THRESHOLD) != Some(std::cmp::Ordering::Greater) {
                below += 1;
            }
        }
    }
    outcome(
        worst <= TFIDF_TOLERANCE && e2e_worst <= TFIDF_TOLERANCE && below == 0 && entries > 0,
        format!(
            "{TFIDF_CASES} scalar cases max |err| {worst:e}, end-to-end max |err| {e2e_worst:e}, \
             {entries} comparison entries, {below} at or below {TFIDF_THRESHOLD}"
        ),
    )
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut longest = 0;
    for seed in 0..GRAD_SEEDS {
        match grad_check(seed, [4, 4, 4, 4], Fault::None) {
            Ok(report) => {
                worst = worst.max(report.max_relative_error());
                longest = longest.max(report.sequence_len);
                if !report.passed() || report.blocks.len() != 16 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let (fast, time) = within(GRAD_BUDGET, start);
    outcome(
        failures == 0 && longest <= 6 && fast,
        format!("{GRAD_SEEDS} seeds, 16 blocks each, max relative error {worst:e} (< {TOLERANCE:e}), {time}"),
    )
}

/// Target is the bucketed count of new-element features; tokens are noise.
fn separable_dataset(seed: u64) -> Vec<TrainExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = ["graph", "model", "task", "data", "result", "method", "network", "score"];
    (0..LEARN_EXAMPLES)
        .map(|_| {
            let count = rng.gen_range(0..10usize);
            let mut f = [0.0; FEATURE_DIM];
            for _ in 0..count {
                f[rng.gen_range(0..12)] += 1.0;
            }
            for v in &mut f[12..] {
                *v = rng.gen_range(0.0..1.0);
            }
            let len = rng.gen_range(2..=6);
            let tokens = (0..len).map(|_| words.choose(&mut rng).unwrap().to_string()).collect();
            TrainExample { tokens, features: FeatureVector(f), target: count / 2 }
        })
        .collect()
}

fn learnability() -> Outcome {
    let start = Instant::now();
    let data = separable_dataset(7);
    let config = TrainConfig {
        word_dim: 8,
        hidden_dim: 8,
        attention_dim: 8,
        evidence_dim: 8,
        epochs: LEARN_EPOCHS,
        seed: 11,
        ..TrainConfig::default()
    };
    let model = train(&data, &config).expect("training runs");
    let acc = accuracy(&model, &data).expect("non-empty");
    let again = train(&data, &config).expect("training runs");
    let deterministic = again == model;
    let (fast, time) = within(LEARN_BUDGET, start);
    outcome(
        acc >= LEARN_TARGET && deterministic && fast,
        format!(
            "{LEARN_EXAMPLES} examples, {LEARN_EPOCHS} epochs, training accuracy {acc:.4} (>= {LEARN_TARGET}), \
             rerun identical: {deterministic}, {time} for both runs"
        ),
    )
}

fn recommendations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shape = Shape { max_mentions: 10, ..Shape::default() };
    let mut violations = 0;
    let mut lists = 0;
    for _ in 0..RECOMMEND_INSTANCES {
        let (target, background) = random_instance(&mut rng, 10, shape);
        let index = build_index(&background, 2010);
        let bundle = extract_evidence(&target, &index);
        let cited: BTreeSet<&String> = target.citations.iter().collect();
        for entry in &bundle.comparison {
            lists += 1;
            let recs = recommend_related(entry, RECOMMENDATIONS);
            let mut expected = entry.uncited.clone();
            expected.sort_by(|a, b| b.year.cmp(&a.year).then_with(|| a.paper_id.cmp(&b.paper_id)));
            expected.truncate(RECOMMENDATIONS);
            let ordered = recs
                .windows(2)
                .all(|w| w[0].year > w[1].year || (w[0].year == w[1].year && w[0].paper_id < w[1].paper_id));
            if recs.len() > RECOMMENDATIONS || recs.iter().any(|p| cited.contains(&p.paper_id)) || !ordered || recs != expected {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && lists > 0,
        format!("{RECOMMEND_INSTANCES} instances, {lists} recommendation lists, {violations} violations"),
    )
}

fn polarity() -> Outcome {
    let templates = TemplateSet::builtin();
    let mut wrong = Vec::new();
    for score in SCORE_RANGE {
        let positive = select_polarity(score) == Polarity::Positive;
        let comment = generate_generic(Category::Soundness, score, &templates).expect("valid score");
        let positive_text = templates.categories[&Category::Soundness].positive[0]
            .fill(&[("SCORE", &score.to_string())])
            .unwrap();
        if positive != (score > 3) || (comment[0] == positive_text) != positive {
            wrong.push(score);
        }
    }
    outcome(wrong.is_empty(), format!("scores 1-5 checked, positive exactly on 4 and 5, wrong: {wrong:?}"))
}

fn review_args(format: &str) -> Vec<String> {
    let toy = toy_dir();
    [
        "kgreview".to_string(),
        "review".into(),
        toy.join("papers/P12.json").display().to_string(),
        "--index".into(),
        toy.join("background.idx").display().to_string(),
        "--models".into(),
        toy.join("models").display().to_string(),
        "--format".into(),
        format.into(),
    ]
    .to_vec()
}

fn run_review_in_process(format: &str) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = kgreview::cli::run(&review_args(format), &mut out, &mut err);
    (code, out)
}

fn run_review_binary(format: &str) -> (i32, Vec<u8>) {
    let args = review_args(format);
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_kgreview"))
        .args(&args[1..])
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn end_to_end() -> Outcome {
    let mut problems = Vec::new();
    for (format, golden) in [("json", "review_P12.json"), ("markdown", "review_P12.md")] {
        let expected = fs::read(golden_dir().join(golden)).expect("golden file");
        let first = run_review_in_process(format);
        let second = run_review_binary(format);
        if first.0 != 0 || second.0 != 0 {
            problems.push(format!("{format}: exit codes {} and {}", first.0, second.0));
        }
        if first.1 != expected || second.1 != expected {
            problems.push(format!("{format}: output differs from golden"));
        }
    }

    let (_, json) = run_review_in_process("json");
    let value: serde_json::Value = serde_json::from_slice(&json).unwrap_or(serde_json::Value::Null);
    let scores = value["scores"].as_object().cloned().unwrap_or_default();
    let comments = value["comments"].as_object().cloned().unwrap_or_default();
    let scores_ok = scores.len() == 7
        && scores.values().all(|s| {
            let score = s["score"].as_u64().unwrap_or(0);
            let conf = s["confidence"].as_f64().unwrap_or(-1.0);
            (1..=5).contains(&score) && conf > 0.0 && conf <= 1.0
        });
    let comments_ok = comments.len() == 8
        && comments.values().all(|c| c.as_array().is_some_and(|a| !a.is_empty()))
        && !comments.contains_key("summary") == scores.contains_key("summary");
    if !scores_ok {
        problems.push("scores out of contract".into());
    }
    if !comments_ok {
        problems.push("comments out of contract".into());
    }
    let detail = if problems.is_empty() {
        "json and markdown identical to the release-built goldens across in-process and binary runs; \
         7 scores in 1..5, confidences in (0,1], 8 commented categories"
            .to_string()
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn persistence() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut problems = Vec::new();

    let corpus = load_corpus(toy_dir().join("papers")).expect("toy corpus");
    let index = build_index(&corpus, 2018);
    let path = dir.path().join("bg.idx");
    save_index(&index, &path).expect("save index");
    let bytes = fs::read(&path).unwrap();
    let loaded = load_index(&path).expect("load index");
    if loaded != index || bytes != index.to_text().as_bytes() {
        problems.push("index round trip".to_string());
    }
    save_index(&loaded, dir.path().join("again.idx")).unwrap();
    if fs::read(dir.path().join("again.idx")).unwrap() != bytes {
        problems.push("index resave differs".into());
    }
    if fs::read(toy_dir().join("background.idx")).unwrap() != bytes {
        problems.push("committed toy index differs".into());
    }
    let text = String::from_utf8(bytes.clone()).unwrap();
    let accepted: Vec<usize> = (0..text.len()).filter(|&cut| BackgroundIndex::from_text(&text[..cut], "cut").is_ok()).collect();
    if !accepted.is_empty() {
        problems.push(format!("index truncations accepted at {accepted:?}"));
    }

    let mut model_files = 0;
    let mut model_cuts = 0;
    for category in Category::SCOREABLE {
        let file = toy_dir().join(format!("models/{}.model", category.name()));
        let bytes = fs::read(&file).expect("toy model");
        let model = load_model(&file).expect("load model");
        let out = dir.path().join("m.model");
        save_model(&model, &out).unwrap();
        if model_to_bytes(&model) != bytes || fs::read(&out).unwrap() != bytes || load_model(&out).unwrap() != model {
            problems.push(format!("{category} model round trip"));
        }
        model_files += 1;
        // every cut near both ends, strided in between
        let cuts = (0..bytes.len()).filter(|&c| c < 512 || c + 512 > bytes.len() || c % 61 == 0);
        for cut in cuts {
            model_cuts += 1;
            if model_from_bytes(&bytes[..cut], "cut").is_ok() {
                problems.push(format!("{category} model truncated at {cut} accepted"));
            }
        }
    }

    // a fully exhaustive truncation sweep on a small trained model
    let tiny = train(
        &[TrainExample { tokens: vec!["x".into()], features: FeatureVector::zeros(), target: 0 }],
        &TrainConfig { word_dim: 2, hidden_dim: 2, attention_dim: 2, evidence_dim: 2, epochs: 1, ..TrainConfig::default() },
    )
    .unwrap();
    let tiny_bytes = model_to_bytes(&tiny);
    let tiny_accepted = (0..tiny_bytes.len()).filter(|&c| model_from_bytes(&tiny_bytes[..c], "cut").is_ok()).count();
    if tiny_accepted > 0 || model_from_bytes(&tiny_bytes, "tiny").unwrap() != tiny {
        problems.push("small model truncation sweep".into());
    }

    let detail = if problems.is_empty() {
        format!(
            "index and {model_files} model files round-trip bitwise; {} index cuts, {model_cuts} model cuts and \
             {} small-model cuts all rejected",
            text.len(),
            tiny_bytes.len()
        )
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "headline results", headline_results),
        (2, "kg merge oracle", merge_oracle),
        (3, "novelty oracle", novelty_oracle),
        (4, "novelty anti-monotonicity", anti_monotone),
        (5, "tf-idf oracle", tfidf_checks),
        (6, "gradient verification", gradient_check),
        (7, "learnability", learnability),
        (8, "recommendation contract", recommendations),
        (9, "polarity contract", polarity),
        (10, "end-to-end determinism", end_to_end),
        (11, "persistence", persistence),
    ];
    // criterion 1 cannot be met at this scale; it is reported, not enforced
    let enforced = |n: u32| n != 1;
    let mut failed = BTreeMap::new();
    for (n, name, check) in criteria {
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} [{verdict}] {name}: {}", result.detail);
        if !result.pass && enforced(n) {
            failed.insert(n, name);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
