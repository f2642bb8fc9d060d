//! Exact dense retrieval over unit-norm code embeddings.
//!
//! Results are ordered by descending dot product, ties by ascending id.
//! Selection keeps a bounded heap of the `k` best rows seen so far; the
//! matrix can be scanned in independent row blocks whose partial results
//! merge into the same answer as a single pass.
//!
//! Index layout: magic `PBIX`, version byte, `N` (u64), `d` (u32), `N`
//! length-prefixed UTF-8 ids (u32 length), then the `N x d` matrix as
//! row-major little-endian f64.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bytes::{FormatError, Reader, Writer};
use crate::encoder::{dot, l2, EncoderError, EncoderParams, Embedding, UNIT_TOLERANCE};
use crate::sample::Sample;

pub const INDEX_MAGIC: &[u8; 4] = b"PBIX";
pub const INDEX_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("unknown id {0:?}")]
    UnknownId(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("row {0} is not unit norm")]
    NotUnit(usize),
    #[error("query dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

/// Top-k hits, best first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub hits: Vec<Hit>,
}

impl RankedResult {
    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Order where `Less` means "ranks earlier". Scores are finite, so
/// `0.0` and `-0.0` tie and fall through to the id.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.partial_cmp(&a_score).unwrap_or(Ordering::Equal).then_with(|| a_id.cmp(b_id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    ids: Vec<String>,
    dim: usize,
    matrix: Vec<f64>,
}

impl Index {
    pub fn new(ids: Vec<String>, dim: usize, matrix: Vec<f64>) -> Result<Self, RetrievalError> {
        if ids.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        if matrix.len() != ids.len() * dim {
            return Err(RetrievalError::DimensionMismatch { expected: ids.len() * dim, got: matrix.len() });
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(RetrievalError::DuplicateId(id.clone()));
            }
        }
        let index = Self { ids, dim, matrix };
        for r in 0..index.len() {
            if (l2(index.row(r)) - 1.0).abs() > UNIT_TOLERANCE {
                return Err(RetrievalError::NotUnit(r));
            }
        }
        Ok(index)
    }

    pub fn from_embeddings(ids: Vec<String>, rows: &[Embedding]) -> Result<Self, RetrievalError> {
        let dim = rows.first().map_or(0, Embedding::dim);
        let matrix = rows.iter().flat_map(|e| e.as_slice().iter().copied()).collect();
        Self::new(ids, dim, matrix)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.matrix[r * self.dim..(r + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn check_query(&self, query: &Embedding) -> Result<(), RetrievalError> {
        if query.dim() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: query.dim() });
        }
        Ok(())
    }

    pub fn score(&self, r: usize, query: &Embedding) -> f64 {
        dot(self.row(r), query.as_slice())
    }

    /// Best `k` rows of `rows`, sorted.
    pub fn search_block(&self, query: &Embedding, rows: Range<usize>, k: usize) -> Vec<(usize, f64)> {
        let mut heap: BinaryHeap<Entry<'_>> = BinaryHeap::with_capacity(k + 1);
        for r in rows {
            let entry = Entry { score: self.score(r, query), id: &self.ids[r], row: r };
            if heap.len() < k {
                heap.push(entry);
            } else if heap.peek().is_some_and(|worst| entry < *worst) {
                heap.pop();
                heap.push(entry);
            }
        }
        heap.into_sorted_vec().into_iter().map(|e| (e.row, e.score)).collect()
    }

    /// Merges block results (each as returned by [`Index::search_block`]).
    pub fn merge_blocks(&self, blocks: impl IntoIterator<Item = Vec<(usize, f64)>>, k: usize) -> RankedResult {
        let mut all: Vec<(usize, f64)> = blocks.into_iter().flatten().collect();
        all.sort_by(|a, b| rank_order(a.1, &self.ids[a.0], b.1, &self.ids[b.0]));
        all.truncate(k);
        RankedResult {
            hits: all.into_iter().map(|(r, score)| Hit { id: self.ids[r].clone(), score }).collect(),
        }
    }

    pub fn check_k(&self, k: usize) -> Result<(), RetrievalError> {
        if k == 0 || k > self.len() {
            return Err(RetrievalError::BadK { k, n: self.len() });
        }
        Ok(())
    }

    /// Serial block scan with blocks of `block_rows` rows, merged in order.
    pub fn search_blocked(&self, query: &Embedding, k: usize, block_rows: usize) -> Result<RankedResult, RetrievalError> {
        self.check_query(query)?;
        self.check_k(k)?;
        let block_rows = block_rows.max(1);
        let blocks = (0..self.len())
            .step_by(block_rows)
            .map(|start| self.search_block(query, start..(start + block_rows).min(self.len()), k));
        Ok(self.merge_blocks(blocks, k))
    }

    pub fn search(&self, query: &Embedding, k: usize) -> Result<RankedResult, RetrievalError> {
        self.search_blocked(query, k, self.len())
    }

    /// 1-based rank of `id` in the full ranking.
    pub fn rank_of(&self, query: &Embedding, id: &str) -> Result<usize, RetrievalError> {
        self.check_query(query)?;
        let target = self.position(id).ok_or_else(|| RetrievalError::UnknownId(String::from(id)))?;
        let target_score = self.score(target, query);
        let ahead = (0..self.len())
            .filter(|&r| rank_order(self.score(r, query), &self.ids[r], target_score, id) == Ordering::Less)
            .count();
        Ok(ahead + 1)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(INDEX_MAGIC, INDEX_VERSION);
        w.u64(self.len() as u64);
        w.u32(self.dim as u32);
        for id in &self.ids {
            w.str(id);
        }
        w.f64s(&self.matrix);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let (mut r, _) = Reader::with_header(bytes, INDEX_MAGIC, INDEX_VERSION)?;
        let n = r.u64()? as usize;
        let dim = r.u32()? as usize;
        let ids = (0..n).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        let matrix = r.f64s(n * dim)?;
        r.finish()?;
        Self::new(ids, dim, matrix).map_err(|e| FormatError::Invalid(format!("{e}")))
    }
}

// Heap order: the greatest entry is the one ranked last.
#[derive(Debug)]
struct Entry<'a> {
    score: f64,
    id: &'a str,
    row: usize,
}

impl PartialEq for Entry<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry<'_> {}

impl PartialOrd for Entry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(self.score, self.id, other.score, other.id)
    }
}

/// Encodes each sample's code, in corpus order.
pub fn build_index(params: &EncoderParams, corpus: &[Sample]) -> Result<Index, RetrievalError> {
    if corpus.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let rows = corpus.iter().map(|s| params.encode(&s.code)).collect::<Result<Vec<_>, _>>()?;
    Index::from_embeddings(corpus.iter().map(|s| s.id.clone()).collect(), &rows)
}

pub fn search_topk(index: &Index, query: &Embedding, k: usize) -> Result<RankedResult, RetrievalError> {
    index.search(query, k)
}

pub fn rank_of(index: &Index, query: &Embedding, relevant_id: &str) -> Result<usize, RetrievalError> {
    index.rank_of(query, relevant_id)
}
