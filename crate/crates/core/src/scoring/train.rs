use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{self, Dims, ModelParams};
use crate::error::{Error, Result};
use crate::evidence::FeatureVector;

pub const UNK: usize = 0;
pub const PAD: usize = 1;
pub const SEP: usize = 2;
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_TOKEN: &str = "<pad>";
pub const SEP_TOKEN: &str = "<sep>";

/// Case-folded token vocabulary with reserved UNK/PAD/SEP ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    /// Tokens seen at least `min_count` times, in lexicographic order after
    /// the reserved entries.
    pub fn build<'a>(sequences: impl IntoIterator<Item = &'a [String]>, min_count: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for seq in sequences {
            for t in seq {
                *counts.entry(t.to_lowercase()).or_default() += 1;
            }
        }
        let words = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count.max(1) && ![UNK_TOKEN, PAD_TOKEN, SEP_TOKEN].contains(&t.as_str()))
            .map(|(t, _)| t);
        Vocab::from_tokens([UNK_TOKEN, PAD_TOKEN, SEP_TOKEN].map(String::from).into_iter().chain(words).collect())
            .expect("reserved tokens lead")
    }

    /// Rebuild from a stored token list, which must start with the reserved
    /// tokens and hold no duplicates.
    pub fn from_tokens(tokens: Vec<String>) -> Option<Self> {
        if tokens.len() < 3 || tokens[UNK] != UNK_TOKEN || tokens[PAD] != PAD_TOKEN || tokens[SEP] != SEP_TOKEN {
            return None;
        }
        let index: BTreeMap<String, usize> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        (index.len() == tokens.len()).then_some(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(&token.to_lowercase()).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub word_dim: usize,
    pub hidden_dim: usize,
    pub attention_dim: usize,
    pub evidence_dim: usize,
    pub classes: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub max_len: usize,
    pub min_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            word_dim: 64,
            hidden_dim: 128,
            attention_dim: 64,
            evidence_dim: 32,
            classes: 5,
            learning_rate: 1e-3,
            epochs: 30,
            seed: 0,
            clip_norm: 5.0,
            max_len: 128,
            min_count: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.word_dim, self.hidden_dim, self.attention_dim, self.evidence_dim, self.max_len];
        if dims.contains(&0) || self.classes < 2 {
            return Err(Error::InvalidArgument("all dimensions must be >= 1 and classes >= 2".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !(self.clip_norm > 0.0) {
            return Err(Error::InvalidArgument("learning rate and clip norm must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub tokens: Vec<String>,
    pub features: FeatureVector,
    /// Class index in `0..classes`.
    pub target: usize,
}

impl TrainExample {
    fn canonical_key(&self) -> (&[String], Vec<u64>, usize) {
        (&self.tokens, self.features.0.iter().map(|f| f.to_bits()).collect(), self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Fraction of examples predicted correctly before their update.
    pub accuracy: f64,
}

/// A trained classifier: configuration, vocabulary and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub params: ModelParams,
}

impl ScoreModel {
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        let mut ids = self.vocab.encode(tokens);
        ids.truncate(self.config.max_len);
        if ids.is_empty() {
            ids.push(UNK);
        }
        ids
    }

    pub fn probabilities(&self, tokens: &[String], features: &FeatureVector) -> Result<Vec<f64>> {
        model::forward(&self.encode(tokens), features, &self.params)
    }
}

/// Adaptive-moment optimizer state.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: ModelParams,
    v: ModelParams,
}

impl Adam {
    fn new(lr: f64, dims: Dims) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: ModelParams::zeros(dims),
            v: ModelParams::zeros(dims),
        }
    }

    fn update(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let eps = self.eps * c2.sqrt();
        for (((p, g), m), v) in params
            .blocks_mut()
            .into_iter()
            .zip(grads.blocks())
            .zip(self.m.blocks_mut())
            .zip(self.v.blocks_mut())
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= step * m[i] / (v[i].sqrt() + eps);
            }
        }
    }
}

fn clip(grads: &mut ModelParams, max_norm: f64) {
    let norm = grads.squared_norm().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for b in grads.blocks_mut() {
            b.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

pub fn train(dataset: &[TrainExample], config: &TrainConfig) -> Result<ScoreModel> {
    train_logged(dataset, config, |_| {})
}

/// Per-example Adam with global-norm clipping. Examples are put in a canonical
/// order before the seeded shuffle, so the result does not depend on the
/// order of `dataset`.
pub fn train_logged(
    dataset: &[TrainExample],
    config: &TrainConfig,
    mut log: impl FnMut(&EpochStats),
) -> Result<ScoreModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    if let Some(bad) = dataset.iter().find(|e| e.target >= config.classes) {
        return Err(Error::InvalidArgument(format!("target {} outside {} classes", bad.target, config.classes)));
    }

    let mut ordered: Vec<&TrainExample> = dataset.iter().collect();
    ordered.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));

    let vocab = Vocab::build(ordered.iter().map(|e| e.tokens.as_slice()), config.min_count);
    let dims = Dims {
        vocab: vocab.len(),
        word: config.word_dim,
        hidden: config.hidden_dim,
        attention: config.attention_dim,
        evidence: config.evidence_dim,
        classes: config.classes,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = ModelParams::init(dims, &mut rng);
    let mut model = ScoreModel { config: config.clone(), vocab, params };
    let encoded: Vec<Vec<usize>> = ordered.iter().map(|e| model.encode(&e.tokens)).collect();

    let mut adam = Adam::new(config.learning_rate, dims);
    let mut grads = ModelParams::zeros(dims);
    let mut order: Vec<usize> = (0..ordered.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        let mut correct = 0usize;
        for &i in &order {
            let example = ordered[i];
            for b in grads.blocks_mut() {
                b.fill(0.0);
            }
            let probs = model::forward_backward(&encoded[i], &example.features, example.target, &model.params, &mut grads);
            total_loss += model::loss(&probs, example.target);
            if argmax(&probs) == example.target {
                correct += 1;
            }
            clip(&mut grads, config.clip_norm);
            adam.update(&mut model.params, &grads);
        }
        log(&EpochStats {
            epoch,
            mean_loss: total_loss / ordered.len() as f64,
            accuracy: correct as f64 / ordered.len() as f64,
        });
    }
    Ok(model)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of examples whose prediction equals the target.
pub fn accuracy(model: &ScoreModel, dataset: &[TrainExample]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0;
    for e in dataset {
        if argmax(&model.probabilities(&e.tokens, &e.features)?) == e.target {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}
