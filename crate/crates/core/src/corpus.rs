//! Corpus validation, CodeXGLUE-style query filtering, and train/test splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::Sample;

pub const RULE_MIN_TOKENS: &str = "min_doc_tokens";
pub const RULE_MAX_TOKENS: &str = "max_doc_tokens";
pub const RULE_SPECIAL_TOKEN: &str = "special_token";
pub const RULE_NON_ENGLISH: &str = "non_english";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("train fraction {0} outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("record {index}: {message}")]
    Invalid { index: usize, message: String },
}

/// Rules applied to each sample's query, in this order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_doc_tokens: usize,
    pub max_doc_tokens: usize,
    /// Substrings that mark a query as carrying markup or links.
    pub special_patterns: Vec<String>,
    /// Minimum fraction of ASCII characters for a query to count as English.
    pub min_ascii_fraction: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_doc_tokens: 3,
            max_doc_tokens: 256,
            special_patterns: ["<img", "http://", "https://"].iter().map(|s| s.to_string()).collect(),
            min_ascii_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total_in: usize,
    pub kept: usize,
    pub rejected_by_rule: BTreeMap<String, usize>,
}

impl FilterReport {
    pub fn rejected(&self) -> usize {
        self.rejected_by_rule.values().sum()
    }
}

/// Name of the first rule `query` violates, if any.
pub fn violated_rule(query: &str, rules: &FilterConfig) -> Option<&'static str> {
    let tokens = query.split_whitespace().count();
    if tokens < rules.min_doc_tokens {
        return Some(RULE_MIN_TOKENS);
    }
    if tokens > rules.max_doc_tokens {
        return Some(RULE_MAX_TOKENS);
    }
    if rules.special_patterns.iter().any(|p| !p.is_empty() && query.contains(p.as_str())) {
        return Some(RULE_SPECIAL_TOKEN);
    }
    let total = query.chars().count();
    let ascii = query.chars().filter(char::is_ascii).count();
    if total > 0 && (ascii as f64) < rules.min_ascii_fraction * total as f64 {
        return Some(RULE_NON_ENGLISH);
    }
    None
}

pub fn filter_corpus(corpus: &[Sample], rules: &FilterConfig) -> (Vec<Sample>, FilterReport) {
    let mut report = FilterReport {
        total_in: corpus.len(),
        ..FilterReport::default()
    };
    for rule in [RULE_MIN_TOKENS, RULE_MAX_TOKENS, RULE_SPECIAL_TOKEN, RULE_NON_ENGLISH] {
        report.rejected_by_rule.insert(rule.to_string(), 0);
    }
    let mut kept = Vec::with_capacity(corpus.len());
    for sample in corpus {
        match violated_rule(&sample.query, rules) {
            Some(rule) => *report.rejected_by_rule.entry(rule.to_string()).or_default() += 1,
            None => kept.push(sample.clone()),
        }
    }
    report.kept = kept.len();
    (kept, report)
}

/// Seeded shuffle followed by a cut at `round(len * train_fraction)`.
pub fn split_corpus(
    corpus: &[Sample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::FractionOutOfRange(train_fraction));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = libm::round(corpus.len() as f64 * train_fraction) as usize;
    let train = order[..cut].iter().map(|&i| corpus[i].clone()).collect();
    let test = order[cut..].iter().map(|&i| corpus[i].clone()).collect();
    Ok((train, test))
}

/// Record-level schema checks that serde cannot express.
pub fn check_sample(sample: &Sample, max_variants: Option<usize>) -> Result<(), String> {
    if sample.id.is_empty() {
        return Err("empty id".into());
    }
    if sample.query.trim().is_empty() {
        return Err("query is empty".into());
    }
    if let Some(variants) = &sample.variants {
        if variants.is_empty() {
            return Err("variants present but empty".into());
        }
        if let Some(max) = max_variants {
            if variants.len() > max {
                return Err(format!("{} variants exceed the configured maximum {max}", variants.len()));
            }
        }
    }
    Ok(())
}

/// Checks every record plus id uniqueness; returns all offending indices.
pub fn validate_corpus(corpus: &[Sample], max_variants: Option<usize>) -> Vec<CorpusError> {
    let mut seen = BTreeSet::new();
    let mut errors = Vec::new();
    for (index, sample) in corpus.iter().enumerate() {
        let result = check_sample(sample, max_variants).and_then(|()| {
            if seen.insert(sample.id.as_str()) {
                Ok(())
            } else {
                Err(format!("duplicate id {:?}", sample.id))
            }
        });
        if let Err(message) = result {
            errors.push(CorpusError::Invalid { index, message });
        }
    }
    errors
}
