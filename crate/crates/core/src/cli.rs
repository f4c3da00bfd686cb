//! Command-line front end.
//!
//! Results go to standard output and diagnostics to standard error. Exit
//! codes: 0 success, 1 failed check or internal error, 2 bad input or usage,
//! 3 missing index or model file.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::background::{build_index, load_index, save_index, BackgroundIndex};
use crate::corpus::{load_corpus, load_paper, load_review_labels, target_scores, Category, PaperRecord};
use crate::error::Error;
use crate::evidence::{extract_evidence, novelty_timeline, EvidenceBundle};
use crate::review::{assemble, render, Format, TemplateSet};
use crate::scoring::gradcheck::{grad_check, Fault, TOLERANCE};
use crate::scoring::{
    category_example, evaluate, load_model, predict_scores, save_model, train_logged, LabeledPaper, ScoreModel,
    TrainConfig, TrainExample,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MISSING: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kgreview", version, about = "Knowledge-graph driven paper review generation")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index the knowledge elements of all corpus papers published before the cutoff.
    BuildBackground {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        cutoff: i32,
        /// Output index file.
        #[arg(long)]
        index: PathBuf,
    },
    /// Score a paper and print its review.
    Review {
        paper: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Template file; the bundled templates when omitted.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: Format,
        /// Background cutoff year; defaults to the paper's own year.
        #[arg(long)]
        cutoff: Option<i32>,
    },
    /// Train one score model per category.
    Train {
        labels: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Word, hidden, attention and evidence sizes.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<[usize; 4]>,
    },
    /// Report accuracy and mean squared error of trained models.
    Evaluate {
        labels: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: PathBuf,
    },
    /// Mean number of new elements of the given papers per cutoff year.
    NoveltyTimeline {
        #[arg(required = true)]
        papers: Vec<String>,
        #[arg(long)]
        corpus: PathBuf,
        /// Inclusive range of cutoff years, `A..B`.
        #[arg(long, value_parser = parse_years)]
        years: (i32, i32),
    },
    /// Compare analytic and numeric gradients of a random small model.
    GradCheck {
        #[arg(long, value_parser = parse_dims, default_value = "4,4,4,4")]
        dims: [usize; 4],
    },
}

fn parse_dims(s: &str) -> Result<[usize; 4], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let dims: [usize; 4] = parts.try_into().map_err(|_| "expected four comma-separated sizes".to_string())?;
    if dims.contains(&0) {
        return Err("sizes must be >= 1".into());
    }
    Ok(dims)
}

fn parse_years(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: i32 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: i32 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty year range {a}..{b}"));
    }
    Ok((a, b))
}

struct Failure {
    code: i32,
    message: String,
}

type Outcome = Result<(), Failure>;

fn input(err: Error) -> Failure {
    let code = match &err {
        Error::MissingModel(_) => EXIT_MISSING,
        Error::PreconditionViolation(_) | Error::ShapeMismatch(_) | Error::EmptySequence => EXIT_CHECK_FAILED,
        _ => EXIT_INPUT,
    };
    Failure { code, message: err.to_string() }
}

/// Like [`input`], but a file that does not exist is a missing artifact.
fn artifact(err: Error) -> Failure {
    if let Error::Io { source, .. } = &err {
        if source.kind() == io::ErrorKind::NotFound {
            return Failure { code: EXIT_MISSING, message: err.to_string() };
        }
    }
    input(err)
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure { code: EXIT_CHECK_FAILED, message: format!("writing output: {e}") })
}

pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    run_with_fault(args, stdout, stderr, Fault::None)
}

/// [`run`] with a corrupted gradient in `grad-check`, so the failing path of
/// the check can be exercised.
pub fn run_with_fault(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write, fault: Fault) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_INPUT
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let seed = cli.seed;
    let result = match cli.command {
        Command::BuildBackground { corpus, cutoff, index } => cmd_build_background(&corpus, cutoff, &index, stdout),
        Command::Review { paper, index, models, templates, format, cutoff } => {
            cmd_review(&paper, &index, &models, templates.as_deref(), format, cutoff, stdout, stderr)
        }
        Command::Train { labels, corpus, index, models, epochs, lr, dims } => {
            let mut config = TrainConfig { seed, ..TrainConfig::default() };
            if let Some(e) = epochs {
                config.epochs = e;
            }
            if let Some(lr) = lr {
                config.learning_rate = lr;
            }
            if let Some([w, h, a, e]) = dims {
                config.word_dim = w;
                config.hidden_dim = h;
                config.attention_dim = a;
                config.evidence_dim = e;
            }
            cmd_train(&corpus, &labels, &index, &models, &config, stdout)
        }
        Command::Evaluate { labels, models, corpus, index } => cmd_evaluate(&models, &corpus, &labels, &index, stdout),
        Command::NoveltyTimeline { papers, corpus, years } => cmd_novelty_timeline(&papers, &corpus, years, stdout),
        Command::GradCheck { dims } => cmd_grad_check(seed, dims, fault, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_build_background(corpus: &Path, cutoff: i32, out: &Path, stdout: &mut dyn Write) -> Outcome {
    let papers = load_corpus(corpus).map_err(input)?;
    let index = build_index(&papers, cutoff);
    save_index(&index, out).map_err(input)?;
    emit(stdout, &format!("papers\t{}\nelements\t{}\n", index.paper_count(), index.key_count()))
}

fn model_path(dir: &Path, category: Category) -> PathBuf {
    dir.join(format!("{}.model", category.name()))
}

fn load_models(dir: &Path) -> Result<BTreeMap<Category, ScoreModel>, Failure> {
    let mut models = BTreeMap::new();
    for category in Category::SCOREABLE {
        let path = model_path(dir, category);
        if !path.exists() {
            return Err(Failure {
                code: EXIT_MISSING,
                message: format!("{}: no model for category {category}", path.display()),
            });
        }
        models.insert(category, load_model(&path).map_err(artifact)?);
    }
    Ok(models)
}

/// The index as seen by a paper published in `year`: only strictly earlier
/// papers count.
fn index_for(index: &BackgroundIndex, year: i32) -> Result<BackgroundIndex, Failure> {
    index.restrict(year.min(index.cutoff_year())).map_err(input)
}

#[allow(clippy::too_many_arguments)]
fn cmd_review(
    paper: &Path,
    index: &Path,
    models: &Path,
    templates: Option<&Path>,
    format: Format,
    cutoff: Option<i32>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Outcome {
    let paper = load_paper(paper).map_err(input)?;
    let templates = match templates {
        Some(path) => TemplateSet::load(path).map_err(input)?,
        None => TemplateSet::builtin(),
    };
    let index = load_index(index).map_err(artifact)?;
    let models = load_models(models)?;
    let cutoff = cutoff.unwrap_or(paper.year);
    if cutoff > index.cutoff_year() {
        let _ = writeln!(
            stderr,
            "warning: index only covers papers before {}, using that cutoff instead of {cutoff}",
            index.cutoff_year()
        );
    }
    let index = index_for(&index, cutoff)?;
    let bundle = extract_evidence(&paper, &index);
    let scores = predict_scores(&paper, &bundle, &models).map_err(input)?;
    let doc = assemble(&paper.paper_id, &scores, &bundle, &templates).map_err(input)?;
    emit(stdout, &render(&doc, format))
}

/// Labeled papers with evidence computed against the background their own
/// publication year allows.
fn labeled_papers(corpus: &Path, labels: &Path, index: &Path) -> Result<Vec<LabeledPaper>, Failure> {
    let papers: BTreeMap<String, PaperRecord> = load_corpus(corpus)
        .map_err(input)?
        .into_iter()
        .map(|p| (p.paper_id.clone(), p))
        .collect();
    let labels = load_review_labels(labels).map_err(input)?;
    if labels.is_empty() {
        return Err(usage("label file contains no papers"));
    }
    let index = load_index(index).map_err(artifact)?;
    let mut out = Vec::with_capacity(labels.len());
    for label in &labels {
        let paper = papers
            .get(&label.paper_id)
            .ok_or_else(|| usage(format!("labeled paper {} is not in the corpus", label.paper_id)))?;
        let bundle: EvidenceBundle = extract_evidence(paper, &index_for(&index, paper.year)?);
        out.push(LabeledPaper { paper: paper.clone(), bundle, targets: target_scores(label) });
    }
    Ok(out)
}

fn cmd_train(
    corpus: &Path,
    labels: &Path,
    index: &Path,
    models: &Path,
    config: &TrainConfig,
    stdout: &mut dyn Write,
) -> Outcome {
    config.validate().map_err(input)?;
    let dataset = labeled_papers(corpus, labels, index)?;
    let mut trained = Vec::new();
    let mut log = String::from("category\tepoch\tloss\taccuracy\n");
    for category in Category::SCOREABLE {
        let examples: Vec<TrainExample> = dataset
            .iter()
            .filter_map(|item| {
                let target = *item.targets.get(&category)?;
                let (tokens, features) = category_example(&item.paper, &item.bundle, category, config.max_len);
                Some(TrainExample { tokens, features, target: usize::from(target) - 1 })
            })
            .collect();
        if examples.is_empty() {
            return Err(usage(format!("no labels for category {category}")));
        }
        let model = train_logged(&examples, config, |s| {
            log.push_str(&format!("{category}\t{}\t{}\t{}\n", s.epoch, s.mean_loss, s.accuracy));
        })
        .map_err(input)?;
        trained.push((category, model));
    }
    std::fs::create_dir_all(models).map_err(|e| input(Error::Io { path: models.to_path_buf(), source: e }))?;
    for (category, model) in &trained {
        save_model(model, model_path(models, *category)).map_err(input)?;
    }
    emit(stdout, &log)
}

fn cmd_evaluate(models: &Path, corpus: &Path, labels: &Path, index: &Path, stdout: &mut dyn Write) -> Outcome {
    let models = load_models(models)?;
    let dataset = labeled_papers(corpus, labels, index)?;
    let metrics = evaluate(&models, &dataset).map_err(input)?;
    let mut text = String::from("category\taccuracy\tmse\tcount\n");
    for (category, m) in metrics {
        text.push_str(&format!("{category}\t{}\t{}\t{}\n", m.accuracy, m.mse, m.count));
    }
    emit(stdout, &text)
}

fn cmd_novelty_timeline(ids: &[String], corpus: &Path, (from, to): (i32, i32), stdout: &mut dyn Write) -> Outcome {
    let corpus = load_corpus(corpus).map_err(input)?;
    let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    let papers: Vec<PaperRecord> = corpus.iter().filter(|p| wanted.contains(p.paper_id.as_str())).cloned().collect();
    if papers.len() != wanted.len() {
        let found: BTreeSet<&str> = papers.iter().map(|p| p.paper_id.as_str()).collect();
        let missing: Vec<&str> = wanted.difference(&found).copied().collect();
        return Err(usage(format!("papers not in the corpus: {}", missing.join(", "))));
    }
    let years: Vec<i32> = (from..=to).collect();
    let timeline = novelty_timeline(&papers, &corpus, &years).map_err(input)?;
    emit(stdout, &timeline.to_plot_text())
}

fn cmd_grad_check(seed: u64, dims: [usize; 4], fault: Fault, stdout: &mut dyn Write) -> Outcome {
    let report = grad_check(seed, dims, fault).map_err(input)?;
    let mut text = String::new();
    for block in &report.blocks {
        text.push_str(&format!("{}\t{}\t{:e}\n", block.name, block.entries, block.max_relative_error));
    }
    text.push_str(&format!("max_relative_error\t{:e}\n", report.max_relative_error()));
    emit(stdout, &text)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CHECK_FAILED,
            message: format!("gradient check failed: {:e} >= {TOLERANCE:e}", report.max_relative_error()),
        })
    }
}
