//! Central finite-difference verification of [`backward`](super::model::backward).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{backward, forward, loss, Dims, ModelParams, BLOCK_NAMES};
use crate::error::{Error, Result};
use crate::evidence::{FeatureVector, FEATURE_DIM};

pub const EPSILON: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Gradient magnitudes below this are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;
const VOCAB: usize = 7;
const CLASSES: usize = 5;
const MAX_LEN: usize = 6;

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockError {
    pub name: &'static str,
    pub entries: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub seed: u64,
    pub sequence_len: usize,
    pub blocks: Vec<BlockError>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_relative_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error() < TOLERANCE
    }
}

/// Which analytic gradient to corrupt, for exercising the checker itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    ScaleRecurrentGradient,
}

/// Check every parameter of a random model with the given
/// `[word, hidden, attention, evidence]` sizes on one random example.
pub fn grad_check(seed: u64, sizes: [usize; 4], fault: Fault) -> Result<GradCheckReport> {
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("gradient-check dimensions must be >= 1".into()));
    }
    let [word, hidden, attention, evidence] = sizes;
    let dims = Dims { vocab: VOCAB, word, hidden, attention, evidence, classes: CLASSES };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(dims);
    for block in params.blocks_mut() {
        for v in block.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    let len = rng.gen_range(1..=MAX_LEN);
    let tokens: Vec<usize> = (0..len).map(|_| rng.gen_range(0..VOCAB)).collect();
    let mut f = [0.0; FEATURE_DIM];
    for v in &mut f {
        *v = rng.gen_range(0.0..2.0);
    }
    let features = FeatureVector(f);
    let target = rng.gen_range(0..CLASSES);

    let (_, mut grads) = backward(&tokens, &features, target, &params)?;
    if fault == Fault::ScaleRecurrentGradient {
        grads.u_h.as_mut_slice().iter_mut().for_each(|g| *g *= 1.1);
    }

    let objective = |p: &ModelParams| -> Result<f64> { Ok(loss(&forward(&tokens, &features, p)?, target)) };
    let mut blocks = Vec::with_capacity(BLOCK_NAMES.len());
    for (b, name) in BLOCK_NAMES.into_iter().enumerate() {
        let entries = grads.blocks()[b].len();
        let mut worst: f64 = 0.0;
        for i in 0..entries {
            let original = params.blocks()[b][i];
            params.blocks_mut()[b][i] = original + EPSILON;
            let plus = objective(&params)?;
            params.blocks_mut()[b][i] = original - EPSILON;
            let minus = objective(&params)?;
            params.blocks_mut()[b][i] = original;
            let numeric = (plus - minus) / (2.0 * EPSILON);
            worst = worst.max(relative_error(grads.blocks()[b][i], numeric));
        }
        blocks.push(BlockError { name, entries, max_relative_error: worst });
    }
    Ok(GradCheckReport { seed, sequence_len: len, blocks })
}
