//! Mean-pooled hashed-subword encoder.
//!
//! `encode` looks up one row of the `V x d` table per token, averages the
//! rows in token order, and L2-normalizes. Texts with no tokens, or whose
//! mean is exactly zero, map to the first basis vector.
//!
//! Checkpoint layout (all integers and reals little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `PBEN` |
//! | 1     | version (1) |
//! | 1     | flags, bit 0 = lowercase |
//! | 4     | `V` (u32) |
//! | 4     | `d` (u32) |
//! | 4     | max_len (u32) |
//! | 8·V·d | table, row-major f64 |

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bytes::{FormatError, Reader, Writer};
use crate::tokenizer::Tokenizer;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PBEN";
pub const CHECKPOINT_VERSION: u8 = 1;
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncoderError {
    #[error("non-finite parameter in row {row}")]
    NonFinite { row: u32 },
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid encoder config: {0}")]
    BadConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    #[serde(flatten)]
    pub tokenizer: Tokenizer,
    pub dim: usize,
    /// Table entries are drawn uniformly from `[-init_scale, init_scale)`.
    pub init_scale: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            dim: 128,
            init_scale: 1.0,
        }
    }
}

/// A unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `v`; zero or empty input yields the first basis vector of
    /// the same length (length 0 stays empty).
    pub fn normalized(mut v: Vec<f64>) -> Self {
        let norm = l2(&v);
        if norm > 0.0 && norm.is_finite() {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            v.iter_mut().for_each(|x| *x = 0.0);
            if let Some(first) = v.first_mut() {
                *first = 1.0;
            }
        }
        Self(v)
    }

    /// Wraps an already-normalized vector without touching it.
    pub fn from_unit(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        dot(&self.0, &other.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Scaled cosine `u·v / tau` of two unit vectors.
pub fn similarity(u: &Embedding, v: &Embedding, tau: f64) -> Result<f64, EncoderError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(EncoderError::BadTemperature(tau));
    }
    if u.dim() != v.dim() {
        return Err(EncoderError::DimensionMismatch(u.dim(), v.dim()));
    }
    Ok(u.dot(v) / tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub tokenizer: Tokenizer,
    pub dim: usize,
    /// Row-major `vocab_buckets x dim`.
    pub table: Vec<f64>,
}

/// Forward state kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Pooled {
    pub tokens: Vec<u32>,
    /// Norm of the mean vector; zero marks the fixed fallback embedding.
    pub norm: f64,
    pub unit: Embedding,
}

impl EncoderParams {
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self, EncoderError> {
        if config.dim < 2 {
            return Err(EncoderError::BadConfig("dim must be at least 2"));
        }
        if config.tokenizer.vocab_buckets == 0 {
            return Err(EncoderError::BadConfig("vocab_buckets must be positive"));
        }
        if !(config.init_scale > 0.0) || !config.init_scale.is_finite() {
            return Err(EncoderError::BadConfig("init_scale must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = config.tokenizer.vocab_buckets as usize * config.dim;
        let s = config.init_scale;
        let table = (0..n).map(|_| rng.random_range(-s..s)).collect();
        Ok(Self {
            tokenizer: config.tokenizer,
            dim: config.dim,
            table,
        })
    }

    pub fn vocab(&self) -> usize {
        self.tokenizer.vocab_buckets as usize
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.table[start..start + self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.table.iter().all(|x| x.is_finite())
    }

    pub(crate) fn pool(&self, tokens: Vec<u32>) -> Result<Pooled, EncoderError> {
        let mut sum = vec![0.0; self.dim];
        for &t in &tokens {
            let row = self.row(t);
            if row.iter().any(|x| !x.is_finite()) {
                return Err(EncoderError::NonFinite { row: t });
            }
            sum.iter_mut().zip(row).for_each(|(s, r)| *s += r);
        }
        if tokens.is_empty() {
            return Ok(Pooled { tokens, norm: 0.0, unit: Embedding::normalized(sum) });
        }
        let count = tokens.len() as f64;
        sum.iter_mut().for_each(|s| *s /= count);
        let norm = l2(&sum);
        let unit = Embedding::normalized(sum);
        Ok(Pooled { tokens, norm, unit })
    }

    pub fn encode(&self, text: &str) -> Result<Embedding, EncoderError> {
        Ok(self.pool(self.tokenizer.tokenize(text))?.unit)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
        self.write_into(&mut w);
        w.finish()
    }

    pub(crate) fn write_into(&self, w: &mut Writer) {
        w.u8(u8::from(self.tokenizer.lowercase));
        w.u32(self.tokenizer.vocab_buckets);
        w.u32(self.dim as u32);
        w.u32(self.tokenizer.max_len as u32);
        w.f64s(&self.table);
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let (mut r, _version) = Reader::with_header(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
        let params = Self::read_from(&mut r)?;
        r.finish()?;
        Ok(params)
    }

    pub(crate) fn read_from(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let flags = r.u8()?;
        if flags > 1 {
            return Err(FormatError::Invalid(alloc::format!("unknown encoder flags {flags:#x}")));
        }
        let vocab = r.u32()?;
        let dim = r.u32()? as usize;
        let max_len = r.u32()? as usize;
        if vocab == 0 || dim < 2 {
            return Err(FormatError::Invalid(alloc::format!("bad shape {vocab}x{dim}")));
        }
        let table = r.f64s(vocab as usize * dim)?;
        Ok(Self {
            tokenizer: Tokenizer {
                vocab_buckets: vocab,
                max_len,
                lowercase: flags & 1 == 1,
            },
            dim,
            table,
        })
    }
}

/// Free-function form of [`EncoderParams::encode`].
pub fn encode(params: &EncoderParams, text: &str) -> Result<Embedding, EncoderError> {
    params.encode(text)
}
