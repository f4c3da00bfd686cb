//! Attentional GRU classifier: forward pass and exact backpropagation.
//!
//! ```text
//! z_t = σ(W_z x_t + U_z h_{t-1} + b_z)
//! r_t = σ(W_r x_t + U_r h_{t-1} + b_r)
//! h̃_t = tanh(W_h x_t + U_h (r_t ⊙ h_{t-1}) + b_h)
//! h_t = (1 - z_t) ⊙ h_{t-1} + z_t ⊙ h̃_t
//! e_i = v_aᵀ tanh(W_a h_i),  α = softmax(e),  c = Σ α_i h_i
//! g   = tanh(W_e f + b_e)
//! p   = softmax(W_o [c; g] + b_o)
//! ```

use rand::Rng;

use super::tensor::{axpy, dot, sigmoid, softmax, Matrix};
use crate::error::{Error, Result};
use crate::evidence::{FeatureVector, FEATURE_DIM};

/// Probabilities below this are clamped inside the loss.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub vocab: usize,
    pub word: usize,
    pub hidden: usize,
    pub attention: usize,
    pub evidence: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Matrix,
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_h: Matrix,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_h: Vec<f64>,
    pub w_a: Matrix,
    pub v_a: Vec<f64>,
    pub w_e: Matrix,
    pub b_e: Vec<f64>,
    pub w_o: Matrix,
    pub b_o: Vec<f64>,
}

/// Names of the parameter blocks in [`ModelParams::blocks`] order.
pub const BLOCK_NAMES: [&str; 16] = [
    "embedding", "w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h", "w_a", "v_a", "w_e", "b_e", "w_o",
    "b_o",
];

impl ModelParams {
    pub fn zeros(d: Dims) -> Self {
        ModelParams {
            embedding: Matrix::zeros(d.vocab, d.word),
            w_z: Matrix::zeros(d.hidden, d.word),
            w_r: Matrix::zeros(d.hidden, d.word),
            w_h: Matrix::zeros(d.hidden, d.word),
            u_z: Matrix::zeros(d.hidden, d.hidden),
            u_r: Matrix::zeros(d.hidden, d.hidden),
            u_h: Matrix::zeros(d.hidden, d.hidden),
            b_z: vec![0.0; d.hidden],
            b_r: vec![0.0; d.hidden],
            b_h: vec![0.0; d.hidden],
            w_a: Matrix::zeros(d.attention, d.hidden),
            v_a: vec![0.0; d.attention],
            w_e: Matrix::zeros(d.evidence, FEATURE_DIM),
            b_e: vec![0.0; d.evidence],
            w_o: Matrix::zeros(d.classes, d.hidden + d.evidence),
            b_o: vec![0.0; d.classes],
        }
    }

    /// Glorot-uniform matrices (and `v_a`), zero biases.
    pub fn init(d: Dims, rng: &mut impl Rng) -> Self {
        let mut p = ModelParams::zeros(d);
        let glorot = |m: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut dyn rand::RngCore| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in m {
                *v = rng.gen_range(-limit..limit);
            }
        };
        for m in [
            &mut p.embedding,
            &mut p.w_z,
            &mut p.w_r,
            &mut p.w_h,
            &mut p.u_z,
            &mut p.u_r,
            &mut p.u_h,
            &mut p.w_a,
            &mut p.w_e,
            &mut p.w_o,
        ] {
            let (rows, cols) = m.shape();
            glorot(m.as_mut_slice(), cols, rows, rng);
        }
        glorot(&mut p.v_a, d.attention, 1, rng);
        p
    }

    pub fn dims(&self) -> Dims {
        Dims {
            vocab: self.embedding.rows(),
            word: self.embedding.cols(),
            hidden: self.w_z.rows(),
            attention: self.w_a.rows(),
            evidence: self.w_e.rows(),
            classes: self.w_o.rows(),
        }
    }

    pub fn blocks(&self) -> [&[f64]; 16] {
        [
            self.embedding.as_slice(),
            self.w_z.as_slice(),
            self.w_r.as_slice(),
            self.w_h.as_slice(),
            self.u_z.as_slice(),
            self.u_r.as_slice(),
            self.u_h.as_slice(),
            &self.b_z,
            &self.b_r,
            &self.b_h,
            self.w_a.as_slice(),
            &self.v_a,
            self.w_e.as_slice(),
            &self.b_e,
            self.w_o.as_slice(),
            &self.b_o,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 16] {
        [
            self.embedding.as_mut_slice(),
            self.w_z.as_mut_slice(),
            self.w_r.as_mut_slice(),
            self.w_h.as_mut_slice(),
            self.u_z.as_mut_slice(),
            self.u_r.as_mut_slice(),
            self.u_h.as_mut_slice(),
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
            self.w_a.as_mut_slice(),
            &mut self.v_a,
            self.w_e.as_mut_slice(),
            &mut self.b_e,
            self.w_o.as_mut_slice(),
            &mut self.b_o,
        ]
    }

    /// Check every block against the shapes implied by `dims()`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        let want = ModelParams::zeros(d);
        let ok = self.blocks().iter().zip(want.blocks().iter()).all(|(a, b)| a.len() == b.len())
            && self.w_r.shape() == want.w_r.shape()
            && self.w_h.shape() == want.w_h.shape()
            && self.u_z.shape() == want.u_z.shape()
            && self.u_r.shape() == want.u_r.shape()
            && self.u_h.shape() == want.u_h.shape()
            && self.w_e.shape() == want.w_e.shape()
            && self.w_o.shape() == want.w_o.shape();
        if ok && d.vocab > 0 && d.word > 0 && d.hidden > 0 && d.attention > 0 && d.evidence > 0 && d.classes > 0 {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("inconsistent parameter shapes for {d:?}")))
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.blocks().iter().flat_map(|b| b.iter()).map(|v| v * v).sum()
    }
}

/// One GRU transition.
pub fn gru_step(x: &[f64], h_prev: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let d = params.dims();
    if x.len() != d.word || h_prev.len() != d.hidden {
        return Err(Error::ShapeMismatch(format!(
            "gru_step expects x of {} and h of {}, got {} and {}",
            d.word,
            d.hidden,
            x.len(),
            h_prev.len()
        )));
    }
    Ok(step(x, h_prev, params).h)
}

struct Step {
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    candidate: Vec<f64>,
    h: Vec<f64>,
}

fn step(x: &[f64], h_prev: &[f64], p: &ModelParams) -> Step {
    let gate = |w: &Matrix, u: &Matrix, b: &[f64], h: &[f64]| -> Vec<f64> {
        let mut a = b.to_vec();
        w.mul_vec_add(x, &mut a);
        u.mul_vec_add(h, &mut a);
        a
    };
    let z: Vec<f64> = gate(&p.w_z, &p.u_z, &p.b_z, h_prev).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = gate(&p.w_r, &p.u_r, &p.b_r, h_prev).into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let candidate: Vec<f64> = gate(&p.w_h, &p.u_h, &p.b_h, &rh).into_iter().map(f64::tanh).collect();
    let h = h_prev
        .iter()
        .zip(&z)
        .zip(&candidate)
        .map(|((hp, zi), ci)| (1.0 - zi) * hp + zi * ci)
        .collect();
    Step { z, r, rh, candidate, h }
}

/// Additive attention over hidden states. Returns the context vector and the
/// attention weights.
pub fn attend(states: &[Vec<f64>], params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if states.is_empty() {
        return Err(Error::EmptySequence);
    }
    let d = params.dims();
    if states.iter().any(|h| h.len() != d.hidden) {
        return Err(Error::ShapeMismatch(format!("attention expects states of {}", d.hidden)));
    }
    let att = attention(states, params);
    Ok((att.context, att.alpha))
}

struct Attention {
    projected: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    context: Vec<f64>,
}

fn attention(states: &[Vec<f64>], p: &ModelParams) -> Attention {
    let projected: Vec<Vec<f64>> = states
        .iter()
        .map(|h| p.w_a.mul_vec(h).into_iter().map(f64::tanh).collect())
        .collect();
    let scores: Vec<f64> = projected.iter().map(|u| dot(&p.v_a, u)).collect();
    let alpha = softmax(&scores);
    let mut context = vec![0.0; states[0].len()];
    for (a, h) in alpha.iter().zip(states) {
        axpy(*a, h, &mut context);
    }
    Attention { projected, alpha, context }
}

/// Everything the backward pass needs from a forward pass.
struct Trace {
    tokens: Vec<usize>,
    inputs: Vec<Vec<f64>>,
    prev: Vec<Vec<f64>>,
    steps: Vec<Step>,
    states: Vec<Vec<f64>>,
    att: Attention,
    evidence: Vec<f64>,
    joint: Vec<f64>,
    probs: Vec<f64>,
}

fn check_inputs(tokens: &[usize], params: &ModelParams) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    let vocab = params.embedding.rows();
    if let Some(t) = tokens.iter().find(|&&t| t >= vocab) {
        return Err(Error::ShapeMismatch(format!("token id {t} outside vocabulary of {vocab}")));
    }
    Ok(())
}

fn run(tokens: &[usize], features: &FeatureVector, p: &ModelParams) -> Trace {
    let d = p.dims();
    let mut h = vec![0.0; d.hidden];
    let mut inputs = Vec::with_capacity(tokens.len());
    let mut prev = Vec::with_capacity(tokens.len());
    let mut steps = Vec::with_capacity(tokens.len());
    let mut states = Vec::with_capacity(tokens.len());
    for &t in tokens {
        let x = p.embedding.row(t).to_vec();
        let s = step(&x, &h, p);
        prev.push(std::mem::replace(&mut h, s.h.clone()));
        states.push(s.h.clone());
        inputs.push(x);
        steps.push(s);
    }
    let att = attention(&states, p);
    let mut evidence = p.b_e.clone();
    p.w_e.mul_vec_add(features.as_slice(), &mut evidence);
    evidence.iter_mut().for_each(|v| *v = v.tanh());
    let joint: Vec<f64> = att.context.iter().chain(&evidence).copied().collect();
    let mut logits = p.b_o.clone();
    p.w_o.mul_vec_add(&joint, &mut logits);
    let probs = softmax(&logits);
    Trace { tokens: tokens.to_vec(), inputs, prev, steps, states, att, evidence, joint, probs }
}

/// Class probabilities for a token-id sequence and its evidence features.
pub fn forward(tokens: &[usize], features: &FeatureVector, params: &ModelParams) -> Result<Vec<f64>> {
    check_inputs(tokens, params)?;
    Ok(run(tokens, features, params).probs)
}

/// Cross-entropy `-ln p[target]`, with `p` clamped at [`MIN_PROBABILITY`].
pub fn loss(probs: &[f64], target: usize) -> f64 {
    -probs[target].max(MIN_PROBABILITY).ln()
}

/// Loss and exact gradients for one example.
pub fn backward(
    tokens: &[usize],
    features: &FeatureVector,
    target: usize,
    params: &ModelParams,
) -> Result<(f64, ModelParams)> {
    check_inputs(tokens, params)?;
    let d = params.dims();
    if target >= d.classes {
        return Err(Error::ShapeMismatch(format!("target {target} outside {} classes", d.classes)));
    }
    let tr = run(tokens, features, params);
    let mut g = ModelParams::zeros(d);
    backprop(&tr, features, target, params, &mut g);
    Ok((loss(&tr.probs, target), g))
}

/// Probabilities plus gradients, for training loops that also want the
/// prediction.
pub(crate) fn forward_backward(
    tokens: &[usize],
    features: &FeatureVector,
    target: usize,
    params: &ModelParams,
    grads: &mut ModelParams,
) -> Vec<f64> {
    let tr = run(tokens, features, params);
    backprop(&tr, features, target, params, grads);
    tr.probs
}

fn backprop(tr: &Trace, features: &FeatureVector, target: usize, p: &ModelParams, g: &mut ModelParams) {
    let d = p.dims();
    if tr.probs[target] < MIN_PROBABILITY {
        // loss is clamped flat here
        return;
    }

    // output layer
    let mut d_logits = tr.probs.clone();
    d_logits[target] -= 1.0;
    g.w_o.add_outer(&d_logits, &tr.joint);
    axpy(1.0, &d_logits, &mut g.b_o);
    let mut d_joint = vec![0.0; d.hidden + d.evidence];
    p.w_o.mul_t_vec_add(&d_logits, &mut d_joint);
    let (d_context, d_evidence) = d_joint.split_at(d.hidden);

    // evidence embedding
    let d_pre: Vec<f64> = d_evidence.iter().zip(&tr.evidence).map(|(dg, e)| dg * (1.0 - e * e)).collect();
    g.w_e.add_outer(&d_pre, features.as_slice());
    axpy(1.0, &d_pre, &mut g.b_e);

    // attention
    let steps = tr.states.len();
    let d_alpha: Vec<f64> = tr.states.iter().map(|h| dot(d_context, h)).collect();
    let weighted = dot(&tr.att.alpha, &d_alpha);
    let mut d_states: Vec<Vec<f64>> = tr.att.alpha.iter().map(|a| d_context.iter().map(|c| a * c).collect()).collect();
    for i in 0..steps {
        let d_score = tr.att.alpha[i] * (d_alpha[i] - weighted);
        let u = &tr.att.projected[i];
        axpy(d_score, u, &mut g.v_a);
        let d_proj: Vec<f64> = p.v_a.iter().zip(u).map(|(v, ui)| d_score * v * (1.0 - ui * ui)).collect();
        g.w_a.add_outer(&d_proj, &tr.states[i]);
        p.w_a.mul_t_vec_add(&d_proj, &mut d_states[i]);
    }

    // recurrence, newest step first
    let mut d_next = vec![0.0; d.hidden];
    for t in (0..steps).rev() {
        let s = &tr.steps[t];
        let h_prev = &tr.prev[t];
        let x = &tr.inputs[t];
        let dh: Vec<f64> = d_states[t].iter().zip(&d_next).map(|(a, b)| a + b).collect();

        let mut d_prev: Vec<f64> = dh.iter().zip(&s.z).map(|(g, z)| g * (1.0 - z)).collect();
        let mut dx = vec![0.0; d.word];

        let da_h: Vec<f64> = (0..d.hidden)
            .map(|k| dh[k] * s.z[k] * (1.0 - s.candidate[k] * s.candidate[k]))
            .collect();
        g.w_h.add_outer(&da_h, x);
        g.u_h.add_outer(&da_h, &s.rh);
        axpy(1.0, &da_h, &mut g.b_h);
        p.w_h.mul_t_vec_add(&da_h, &mut dx);
        let mut d_rh = vec![0.0; d.hidden];
        p.u_h.mul_t_vec_add(&da_h, &mut d_rh);
        for k in 0..d.hidden {
            d_prev[k] += d_rh[k] * s.r[k];
        }

        let da_z: Vec<f64> = (0..d.hidden)
            .map(|k| dh[k] * (s.candidate[k] - h_prev[k]) * s.z[k] * (1.0 - s.z[k]))
            .collect();
        let da_r: Vec<f64> = (0..d.hidden)
            .map(|k| d_rh[k] * h_prev[k] * s.r[k] * (1.0 - s.r[k]))
            .collect();
        for (w, u, b, da) in [(&mut g.w_z, &mut g.u_z, &mut g.b_z, &da_z), (&mut g.w_r, &mut g.u_r, &mut g.b_r, &da_r)] {
            w.add_outer(da, x);
            u.add_outer(da, h_prev);
            axpy(1.0, da, b);
        }
        p.w_z.mul_t_vec_add(&da_z, &mut dx);
        p.u_z.mul_t_vec_add(&da_z, &mut d_prev);
        p.w_r.mul_t_vec_add(&da_r, &mut dx);
        p.u_r.mul_t_vec_add(&da_r, &mut d_prev);

        axpy(1.0, &dx, g.embedding.row_mut(tr.tokens[t]));
        d_next = d_prev;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(h: usize) -> Dims {
        Dims { vocab: 6, word: 3, hidden: h, attention: 2, evidence: 2, classes: 5 }
    }

    fn random_params(seed: u64, d: Dims) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::zeros(d);
        for b in p.blocks_mut() {
            for v in b.iter_mut() {
                *v = rng.gen_range(-0.8..0.8);
            }
        }
        p
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    // scalar-by-scalar GRU, written without Matrix helpers
    fn slow_gru(x: &[f64], h: &[f64], p: &ModelParams) -> Vec<f64> {
        let n = h.len();
        let mut z = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 0..n {
            let mut az = p.b_z[i];
            let mut ar = p.b_r[i];
            for j in 0..x.len() {
                az += p.w_z.get(i, j) * x[j];
                ar += p.w_r.get(i, j) * x[j];
            }
            for j in 0..n {
                az += p.u_z.get(i, j) * h[j];
                ar += p.u_r.get(i, j) * h[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut ah = p.b_h[i];
            for j in 0..x.len() {
                ah += p.w_h.get(i, j) * x[j];
            }
            for j in 0..n {
                ah += p.u_h.get(i, j) * r[j] * h[j];
            }
            out[i] = (1.0 - z[i]) * h[i] + z[i] * ah.tanh();
        }
        out
    }

    fn slow_softmax(v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().map(|x| x.exp()).sum();
        v.iter().map(|x| x.exp() / s).collect()
    }

    fn slow_attend(hs: &[Vec<f64>], p: &ModelParams) -> (Vec<f64>, Vec<f64>) {
        let mut e = Vec::new();
        for h in hs {
            let mut score = 0.0;
            for a in 0..p.v_a.len() {
                let mut acc = 0.0;
                for j in 0..h.len() {
                    acc += p.w_a.get(a, j) * h[j];
                }
                score += p.v_a[a] * acc.tanh();
            }
            e.push(score);
        }
        let alpha = slow_softmax(&e);
        let mut c = vec![0.0; hs[0].len()];
        for (i, h) in hs.iter().enumerate() {
            for j in 0..h.len() {
                c[j] += alpha[i] * h[j];
            }
        }
        (c, alpha)
    }

    fn slow_forward(tokens: &[usize], f: &FeatureVector, p: &ModelParams) -> Vec<f64> {
        let d = p.dims();
        let mut h = vec![0.0; d.hidden];
        let mut hs = Vec::new();
        for &t in tokens {
            let x: Vec<f64> = (0..d.word).map(|j| p.embedding.get(t, j)).collect();
            h = slow_gru(&x, &h, p);
            hs.push(h.clone());
        }
        let (c, _) = slow_attend(&hs, p);
        let mut joint = c;
        for i in 0..d.evidence {
            let mut a = p.b_e[i];
            for j in 0..FEATURE_DIM {
                a += p.w_e.get(i, j) * f.0[j];
            }
            joint.push(a.tanh());
        }
        let logits: Vec<f64> = (0..d.classes)
            .map(|k| p.b_o[k] + (0..joint.len()).map(|j| p.w_o.get(k, j) * joint[j]).sum::<f64>())
            .collect();
        slow_softmax(&logits)
    }

    #[test]
    fn gru_zero_params() {
        let p = ModelParams::zeros(dims(3));
        assert_eq!(gru_step(&[0.3, -1.0, 2.0], &[0.0; 3], &p).unwrap(), vec![0.0; 3]);
        let h = gru_step(&[0.3, -1.0, 2.0], &[1.0, -2.0, 4.0], &p).unwrap();
        assert_eq!(h, vec![0.5, -1.0, 2.0]);
        assert!(matches!(gru_step(&[0.0; 2], &[0.0; 3], &p), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn gru_matches_scalar_oracle() {
        for seed in 0..5 {
            let p = random_params(seed, dims(3));
            let x = [0.4, -0.7, 1.1];
            let h = [0.2, -0.5, 0.9];
            let fast = gru_step(&x, &h, &p).unwrap();
            let slow = slow_gru(&x, &h, &p);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-14, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn attention_examples() {
        let p = random_params(3, dims(3));
        let (c, a) = attend(&[vec![0.1, 0.2, 0.3]], &p).unwrap();
        assert_eq!(a, vec![1.0]);
        assert_eq!(c, vec![0.1, 0.2, 0.3]);
        let (_, a) = attend(&[vec![0.5, 0.1, 0.0], vec![0.5, 0.1, 0.0]], &p).unwrap();
        assert_eq!(a, vec![0.5, 0.5]);
        assert!(matches!(attend(&[], &p), Err(Error::EmptySequence)));

        let hs: Vec<Vec<f64>> = (0..4).map(|i| vec![0.3 * i as f64, -0.2, 0.1 * i as f64 - 0.4]).collect();
        let (c, a) = attend(&hs, &p).unwrap();
        let (c2, a2) = slow_attend(&hs, &p);
        for (x, y) in a.iter().zip(&a2).chain(c.iter().zip(&c2)) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_examples() {
        let mut p = random_params(5, dims(3));
        let f = FeatureVector([0.5; FEATURE_DIM]);
        let probs = forward(&[1, 2, 3, 0], &f, &p).unwrap();
        let slow = slow_forward(&[1, 2, 3, 0], &f, &p);
        for (a, b) in probs.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        p.w_o = Matrix::zeros(5, 5);
        p.b_o = vec![0.0; 5];
        assert_eq!(forward(&[1], &f, &p).unwrap(), vec![0.2; 5]);
        assert!(forward(&[], &f, &p).is_err());
        assert!(matches!(forward(&[6], &f, &p), Err(Error::ShapeMismatch(_))));

        let mut two = random_params(6, Dims { classes: 2, ..dims(3) });
        two.w_o = Matrix::zeros(2, 5);
        two.b_o = vec![1.7, 1.7];
        assert_eq!(forward(&[2, 2], &f, &two).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn loss_examples() {
        assert!((loss(&[0.2; 5], 3) - 5f64.ln()).abs() < 1e-15);
        assert_eq!(loss(&[0.0, 1.0], 1), 0.0);
        assert!((loss(&[0.0, 1.0], 0) + (1e-12f64).ln()).abs() < 1e-9);
        let p = [0.1, 0.6, 0.3];
        assert!((loss(&p, 2) - (-(0.3f64).ln())).abs() < 1e-15);
    }

    #[test]
    fn unused_path_has_zero_gradient() {
        let mut p = random_params(9, dims(3));
        for k in 0..5 {
            for j in 3..5 {
                p.w_o.set(k, j, 0.0);
            }
        }
        let f = FeatureVector([1.0; FEATURE_DIM]);
        let (_, g) = backward(&[1, 4], &f, 2, &p).unwrap();
        assert!(g.w_e.as_slice().iter().all(|&v| v == 0.0));
        assert!(g.b_e.iter().all(|&v| v == 0.0));
        // untouched vocabulary rows
        assert!(g.embedding.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn confident_example_has_vanishing_gradient() {
        let mut p = random_params(10, dims(3));
        p.b_o = vec![0.0, 0.0, 60.0, 0.0, 0.0];
        let f = FeatureVector::zeros();
        let (l, g) = backward(&[1, 2, 3], &f, 2, &p).unwrap();
        assert!(l < 1e-20);
        assert!(g.squared_norm().sqrt() < 1e-20);
    }
}
