//! Review score prediction.
//!
//! Each scoreable category gets its own attentional GRU classifier over the
//! category's evidence sentences, concatenated with an embedding of the
//! evidence feature vector. The same machinery with two classes drives the
//! review-sentence selector.

pub mod gradcheck;
pub mod io;
pub mod model;
pub mod tensor;
pub mod train;

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{Category, PaperRecord, SectionKind};
use crate::error::{Error, Result};
use crate::evidence::{EvidenceBundle, FeatureVector};
use crate::kg::{ElementKey, Entity, KnowledgeGraph};

pub use io::{load_model, save_model};
pub use model::{attend, backward, forward, gru_step, loss, Dims, ModelParams};
pub use train::{argmax, train, train_logged, EpochStats, ScoreModel, TrainConfig, TrainExample, Vocab};

/// Number of score classes (scores 1 to 5).
pub const SCORE_CLASSES: usize = 5;

fn entities_of<'a>(graph: &'a KnowledgeGraph, keys: impl IntoIterator<Item = &'a ElementKey>) -> Vec<&'a Entity> {
    let mut out = Vec::new();
    for key in keys {
        let reps = match key {
            ElementKey::Node(rep) => vec![rep],
            ElementKey::Edge { head, tail, .. } => vec![head, tail],
        };
        out.extend(reps.into_iter().filter_map(|r| graph.entity_by_representative(r)));
    }
    out
}

/// Entities whose mentions mark a sentence as relevant to `category`. Empty
/// for categories scored without structured evidence.
fn evidence_entities(bundle: &EvidenceBundle, category: Category) -> Vec<&Entity> {
    match category {
        Category::Summary | Category::OverallRecommendation => bundle.summary.entities.iter().collect(),
        Category::Novelty => entities_of(&bundle.graph, &bundle.novelty_new),
        Category::MeaningfulComparison => entities_of(&bundle.graph, bundle.comparison.iter().map(|c| &c.element)),
        Category::Appropriateness | Category::Clarity | Category::Soundness | Category::PotentialImpact => Vec::new(),
    }
}

/// Input tokens for one category: the sentences (document order) mentioning
/// the category's evidence, separated by SEP. Falls back to the abstract, and
/// to a lone UNK when that is empty too. Truncated to `max_len` tokens.
pub fn category_sentences(paper: &PaperRecord, bundle: &EvidenceBundle, category: Category, max_len: usize) -> Vec<String> {
    let located: BTreeSet<(SectionKind, usize)> = evidence_entities(bundle, category)
        .into_iter()
        .flat_map(|e| e.mentions.iter().map(|m| (m.section, m.sentence_index)))
        .collect();
    let mut sentences: Vec<&[String]> = located
        .into_iter()
        .filter_map(|(s, i)| paper.sentence(s, i).map(|s| s.tokens.as_slice()))
        .collect();
    if sentences.is_empty() {
        sentences = paper.section(SectionKind::Abstract).iter().map(|s| s.tokens.as_slice()).collect();
    }
    let mut tokens: Vec<String> = Vec::new();
    for (i, s) in sentences.into_iter().enumerate() {
        if i > 0 {
            tokens.push(train::SEP_TOKEN.to_string());
        }
        tokens.extend(s.iter().cloned());
    }
    if tokens.is_empty() {
        tokens.push(train::UNK_TOKEN.to_string());
    }
    tokens.truncate(max_len.max(1));
    tokens
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryScore {
    /// 1 to 5.
    pub score: u8,
    /// Probability of the predicted score.
    pub confidence: f64,
    pub probabilities: Vec<f64>,
}

impl CategoryScore {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        let best = argmax(&probabilities);
        CategoryScore { score: best as u8 + 1, confidence: probabilities[best], probabilities }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreReport {
    pub scores: BTreeMap<Category, CategoryScore>,
}

impl ScoreReport {
    pub fn get(&self, category: Category) -> Option<&CategoryScore> {
        self.scores.get(&category)
    }
}

/// Model inputs for one paper and category.
pub fn category_example(
    paper: &PaperRecord,
    bundle: &EvidenceBundle,
    category: Category,
    max_len: usize,
) -> (Vec<String>, FeatureVector) {
    (category_sentences(paper, bundle, category, max_len), bundle.features)
}

pub fn predict_scores(
    paper: &PaperRecord,
    bundle: &EvidenceBundle,
    models: &BTreeMap<Category, ScoreModel>,
) -> Result<ScoreReport> {
    let mut report = ScoreReport::default();
    for category in Category::SCOREABLE {
        let model = models.get(&category).ok_or(Error::MissingModel(category))?;
        let (tokens, features) = category_example(paper, bundle, category, model.config.max_len);
        let probs = model.probabilities(&tokens, &features)?;
        report.scores.insert(category, CategoryScore::from_probabilities(probs));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub mse: f64,
    pub count: usize,
}

/// Exact-match accuracy and mean squared error between score lists.
pub fn score_metrics(predicted: &[u8], targets: &[u8]) -> Result<Metrics> {
    if predicted.is_empty() || predicted.len() != targets.len() {
        return Err(Error::EmptyDataset);
    }
    let n = predicted.len() as f64;
    let hits = predicted.iter().zip(targets).filter(|(p, t)| p == t).count() as f64;
    let se: f64 = predicted
        .iter()
        .zip(targets)
        .map(|(&p, &t)| (f64::from(p) - f64::from(t)).powi(2))
        .sum();
    Ok(Metrics { accuracy: hits / n, mse: se / n, count: predicted.len() })
}

/// A paper with its evidence and rounded-average target scores.
#[derive(Debug, Clone)]
pub struct LabeledPaper {
    pub paper: PaperRecord,
    pub bundle: EvidenceBundle,
    pub targets: BTreeMap<Category, u8>,
}

/// Per-category metrics over the papers labeled in that category.
pub fn evaluate(models: &BTreeMap<Category, ScoreModel>, dataset: &[LabeledPaper]) -> Result<BTreeMap<Category, Metrics>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut pairs: BTreeMap<Category, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    for item in dataset {
        let report = predict_scores(&item.paper, &item.bundle, models)?;
        for (&category, &target) in &item.targets {
            if let Some(s) = report.get(category) {
                let entry = pairs.entry(category).or_default();
                entry.0.push(s.score);
                entry.1.push(target);
            }
        }
    }
    pairs
        .into_iter()
        .map(|(c, (p, t))| score_metrics(&p, &t).map(|m| (c, m)))
        .collect()
}

/// Select/not-select decision of a two-class model. Class 1 means select and
/// must beat 0.5 strictly. Evidence features are zero.
pub fn classify_sentence(tokens: &[String], model: &ScoreModel) -> Result<(bool, f64)> {
    if model.config.classes != 2 {
        return Err(Error::ShapeMismatch(format!("sentence selector needs 2 classes, model has {}", model.config.classes)));
    }
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    let probs = model.probabilities(tokens, &FeatureVector::zeros())?;
    let selected = probs[1] > 0.5;
    Ok((selected, if selected { probs[1] } else { probs[0] }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_probabilities_pick_lowest_score() {
        let s = CategoryScore::from_probabilities(vec![0.2; 5]);
        assert_eq!(s.score, 1);
        assert_eq!(s.confidence, 0.2);
        let s = CategoryScore::from_probabilities(vec![0.1, 0.1, 0.1, 0.6, 0.1]);
        assert_eq!(s.score, 4);
    }

    #[test]
    fn metric_examples() {
        let m = score_metrics(&[1, 3, 5], &[1, 3, 5]).unwrap();
        assert_eq!((m.accuracy, m.mse), (1.0, 0.0));
        let m = score_metrics(&[2, 4, 4], &[1, 3, 5]).unwrap();
        assert_eq!((m.accuracy, m.mse), (0.0, 1.0));
        assert!(score_metrics(&[], &[]).is_err());
    }
}
