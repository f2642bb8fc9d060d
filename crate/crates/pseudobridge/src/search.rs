//! Block-parallel exact search over an [`Index`].

use pseudobridge_core::retrieval::{Index, RankedResult, RetrievalError};
use pseudobridge_core::Embedding;
use rayon::prelude::*;

pub const DEFAULT_BLOCK_ROWS: usize = 4096;

/// Scores row blocks in parallel and merges them in block order, so the
/// result is identical to the serial search.
pub fn par_search(index: &Index, query: &Embedding, k: usize, block_rows: usize) -> Result<RankedResult, RetrievalError> {
    index.check_query(query)?;
    index.check_k(k)?;
    let block_rows = block_rows.max(1);
    let starts: Vec<usize> = (0..index.len()).step_by(block_rows).collect();
    let blocks: Vec<Vec<(usize, f64)>> = starts
        .par_iter()
        .map(|&s| index.search_block(query, s..(s + block_rows).min(index.len()), k))
        .collect();
    Ok(index.merge_blocks(blocks, k))
}

/// Answers many queries in parallel; results keep query order.
pub fn par_search_many(index: &Index, queries: &[Embedding], k: usize) -> Result<Vec<RankedResult>, RetrievalError> {
    queries.par_iter().map(|q| index.search(q, k)).collect()
}
