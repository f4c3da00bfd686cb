//! Binary model container.
//!
//! Layout (little endian): magic `KGRMODEL`, format version (u32), the
//! training configuration, the vocabulary (u64 count, then length-prefixed
//! UTF-8 tokens), the sixteen parameter blocks (u64 rows, u64 cols, raw f64
//! bits) and a closing `ENDMODEL` marker. Loading rejects anything short,
//! long, or inconsistent.

use std::fs;
use std::path::Path;

use super::model::{ModelParams, BLOCK_NAMES};
use super::tensor::Matrix;
use super::train::{ScoreModel, TrainConfig, Vocab};
use crate::background::write_atomic;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"KGRMODEL";
const END: &[u8; 8] = b"ENDMODEL";
const VERSION: u32 = 1;

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_bits().to_le_bytes());
}

fn shapes(p: &ModelParams) -> [(usize, usize); 16] {
    let m = |x: &Matrix| x.shape();
    let v = |x: &Vec<f64>| (x.len(), 1);
    [
        m(&p.embedding),
        m(&p.w_z),
        m(&p.w_r),
        m(&p.w_h),
        m(&p.u_z),
        m(&p.u_r),
        m(&p.u_h),
        v(&p.b_z),
        v(&p.b_r),
        v(&p.b_h),
        m(&p.w_a),
        v(&p.v_a),
        m(&p.w_e),
        v(&p.b_e),
        m(&p.w_o),
        v(&p.b_o),
    ]
}

pub fn model_to_bytes(model: &ScoreModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let c = &model.config;
    for v in [
        c.word_dim,
        c.hidden_dim,
        c.attention_dim,
        c.evidence_dim,
        c.classes,
        c.epochs,
        c.max_len,
        c.min_count,
    ] {
        put_u64(&mut out, v as u64);
    }
    put_u64(&mut out, c.seed);
    put_f64(&mut out, c.learning_rate);
    put_f64(&mut out, c.clip_norm);

    put_u64(&mut out, model.vocab.len() as u64);
    for t in model.vocab.tokens() {
        put_u64(&mut out, t.len() as u64);
        out.extend_from_slice(t.as_bytes());
    }
    for ((rows, cols), block) in shapes(&model.params).into_iter().zip(model.params.blocks()) {
        put_u64(&mut out, rows as u64);
        put_u64(&mut out, cols as u64);
        for &v in block {
            put_f64(&mut out, v);
        }
    }
    out.extend_from_slice(END);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    locus: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.locus, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        // no field of a sane model needs more than 2^32
        usize::try_from(v)
            .ok()
            .filter(|&v| v <= u32::MAX as usize)
            .ok_or_else(|| Error::format(self.locus, format!("implausible size {v}")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}

pub fn model_from_bytes(bytes: &[u8], locus: &str) -> Result<ScoreModel> {
    let mut r = Reader { bytes, pos: 0, locus };
    if r.take(8)? != MAGIC {
        return Err(Error::format(locus, "not a model file"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::format(locus, format!("unsupported model version {version}")));
    }
    let config = TrainConfig {
        word_dim: r.usize()?,
        hidden_dim: r.usize()?,
        attention_dim: r.usize()?,
        evidence_dim: r.usize()?,
        classes: r.usize()?,
        epochs: r.usize()?,
        max_len: r.usize()?,
        min_count: r.usize()?,
        seed: r.u64()?,
        learning_rate: r.f64()?,
        clip_norm: r.f64()?,
    };

    let count = r.usize()?;
    let mut tokens = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len = r.usize()?;
        let raw = r.take(len)?;
        let token = std::str::from_utf8(raw).map_err(|_| Error::format(locus, "vocabulary token is not UTF-8"))?;
        tokens.push(token.to_string());
    }
    let vocab = Vocab::from_tokens(tokens).ok_or_else(|| Error::format(locus, "malformed vocabulary"))?;

    let mut blocks: Vec<(usize, usize, Vec<f64>)> = Vec::with_capacity(16);
    for name in BLOCK_NAMES {
        let rows = r.usize()?;
        let cols = r.usize()?;
        let n = rows
            .checked_mul(cols)
            .filter(|&n| n <= (bytes.len() / 8))
            .ok_or_else(|| Error::format(locus, format!("block {name} too large")))?;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(r.f64()?);
        }
        blocks.push((rows, cols, data));
    }
    if r.take(8)? != END {
        return Err(Error::format(locus, "missing end marker"));
    }
    if r.pos != bytes.len() {
        return Err(Error::format(locus, "trailing bytes after end marker"));
    }

    let mut it = blocks.into_iter();
    let mut mat = || {
        let (rows, cols, data) = it.next().expect("sixteen blocks");
        (Matrix::from_vec(rows, cols, data.clone()).expect("sized above"), data)
    };
    let params = ModelParams {
        embedding: mat().0,
        w_z: mat().0,
        w_r: mat().0,
        w_h: mat().0,
        u_z: mat().0,
        u_r: mat().0,
        u_h: mat().0,
        b_z: mat().1,
        b_r: mat().1,
        b_h: mat().1,
        w_a: mat().0,
        v_a: mat().1,
        w_e: mat().0,
        b_e: mat().1,
        w_o: mat().0,
        b_o: mat().1,
    };
    params.validate().map_err(|e| Error::format(locus, e.to_string()))?;
    let d = params.dims();
    if d.vocab != vocab.len()
        || d.word != config.word_dim
        || d.hidden != config.hidden_dim
        || d.attention != config.attention_dim
        || d.evidence != config.evidence_dim
        || d.classes != config.classes
    {
        return Err(Error::format(locus, "parameter shapes disagree with the stored configuration"));
    }
    Ok(ScoreModel { config, vocab, params })
}

pub fn save_model(model: &ScoreModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &model_to_bytes(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ScoreModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes, &path.display().to_string())
}
