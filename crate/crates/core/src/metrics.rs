//! MRR and Recall@k, and the evaluation protocol that produces them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EncoderParams;
use crate::retrieval::{build_index, Index, RetrievalError};
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("no queries")]
    Empty,
    #[error("rank {0} is below 1")]
    BadRank(usize),
    #[error("query {index}: relevant-in-top-k {found} not within 0..=min(k, {total})")]
    BadCounts { index: usize, found: usize, total: usize },
    #[error("k must be at least 1")]
    BadK,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// Mean of `1 / rank_i` over queries with 1-based ranks.
pub fn mrr(ranks: &[usize]) -> Result<f64, MetricError> {
    if ranks.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for &r in ranks {
        if r < 1 {
            return Err(MetricError::BadRank(r));
        }
        sum += 1.0 / r as f64;
    }
    Ok(sum / ranks.len() as f64)
}

/// Macro-averaged recall from `(relevant in top k, total relevant)` per query.
pub fn recall_at_k(per_query: &[(usize, usize)], k: usize) -> Result<f64, MetricError> {
    if per_query.is_empty() {
        return Err(MetricError::Empty);
    }
    if k == 0 {
        return Err(MetricError::BadK);
    }
    let mut sum = 0.0;
    for (index, &(found, total)) in per_query.iter().enumerate() {
        if total == 0 || found > k.min(total) {
            return Err(MetricError::BadCounts { index, found, total });
        }
        sum += found as f64 / total as f64;
    }
    Ok(sum / per_query.len() as f64)
}

/// Recall@k under one relevant item per query.
pub fn recall_from_ranks(ranks: &[usize], k: usize) -> Result<f64, MetricError> {
    let counts: Vec<(usize, usize)> = ranks.iter().map(|&r| (usize::from(r <= k), 1)).collect();
    if let Some(&bad) = ranks.iter().find(|&&r| r < 1) {
        return Err(MetricError::BadRank(bad));
    }
    recall_at_k(&counts, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageReport {
    pub query_count: usize,
    pub mrr: f64,
    pub recall_at_k: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub query_count: usize,
    pub mrr: f64,
    pub recall_at_k: BTreeMap<usize, f64>,
    pub per_language: BTreeMap<String, LanguageReport>,
    pub ranks: Vec<usize>,
}

/// One line of the rank dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub id: String,
    pub rank: usize,
    pub top1_id: String,
    pub top1_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub rows: Vec<RankRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Cap on the candidate pool per language: only the first `n` samples
    /// of each language (in corpus order) are indexed and queried.
    pub max_pool: Option<usize>,
}

fn summarize(ranks: &[usize], k_list: &[usize]) -> Result<(f64, BTreeMap<usize, f64>), MetricError> {
    let m = mrr(ranks)?;
    let mut recall = BTreeMap::new();
    for &k in k_list {
        recall.insert(k, recall_from_ranks(ranks, k)?);
    }
    Ok((m, recall))
}

/// Ranks each query's own code among all code of the same language.
pub fn evaluate_with(
    params: &EncoderParams,
    test: &[Sample],
    k_list: &[usize],
    options: &EvalOptions,
) -> Result<Evaluation, MetricError> {
    if test.is_empty() {
        return Err(MetricError::Empty);
    }
    if k_list.contains(&0) {
        return Err(MetricError::BadK);
    }
    // language -> sample positions, corpus order
    let mut pools: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in test.iter().enumerate() {
        let pool = pools.entry(s.language.as_str()).or_default();
        if options.max_pool.is_none_or(|cap| pool.len() < cap) {
            pool.push(i);
        }
    }
    let mut slots: Vec<Option<RankRow>> = alloc::vec![None; test.len()];
    let mut per_language = BTreeMap::new();
    for (lang, members) in &pools {
        let pool: Vec<Sample> = members.iter().map(|&i| test[i].clone()).collect();
        let index: Index = build_index(params, &pool)?;
        let mut lang_ranks = Vec::with_capacity(members.len());
        for &i in members {
            let q = params.encode(&test[i].query).map_err(RetrievalError::from)?;
            let rank = index.rank_of(&q, &test[i].id)?;
            let top = index.search(&q, 1)?;
            lang_ranks.push(rank);
            slots[i] = Some(RankRow {
                id: test[i].id.clone(),
                rank,
                top1_id: top.hits[0].id.clone(),
                top1_score: top.hits[0].score,
            });
        }
        let (m, recall) = summarize(&lang_ranks, k_list)?;
        per_language.insert(String::from(*lang), LanguageReport { query_count: lang_ranks.len(), mrr: m, recall_at_k: recall });
    }
    let rows: Vec<RankRow> = slots.into_iter().flatten().collect();
    let ranks: Vec<usize> = rows.iter().map(|r| r.rank).collect();
    let (m, recall) = summarize(&ranks, k_list)?;
    Ok(Evaluation {
        report: EvalReport { query_count: ranks.len(), mrr: m, recall_at_k: recall, per_language, ranks },
        rows,
    })
}

pub fn evaluate(params: &EncoderParams, test: &[Sample], k_list: &[usize]) -> Result<EvalReport, MetricError> {
    evaluate_with(params, test, k_list, &EvalOptions::default()).map(|e| e.report)
}
