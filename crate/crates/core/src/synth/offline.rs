//! Deterministic backend: rule-table pseudo-code, the style transforms for
//! variants, and a checklist scorer.
//!
//! Pseudo-code scores, each 1..=5:
//! - readability: 5 if every line is indented with a multiple of four
//!   spaces and no tabs, else 3.
//! - correctness: `1 + round(4 * c)` where `c` is the fraction of the rule
//!   table's control-flow keywords (as a multiset) present in the candidate.
//! - completeness: `1 + round(4 * min(1, b / e))` with `b` and `e` the
//!   non-header line counts of the candidate and the rule-table output.
//! - conciseness: from the candidate-to-reference length ratio.
//! - maintainability: 5 minus one per defect kind (tabs, comments,
//!   trailing whitespace).
//!
//! Variant scores hinge on token-stream equality with the original under
//! [`normalize`](super::style::normalize): a mismatch scores 1 on both
//! correctness and completeness. Conciseness compares comment-free lengths
//! with the original code.

use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::{lex, Kind};
use super::pseudocode::{keyword_profile, strip_comments, to_pseudocode};
use super::style::{apply_variant, normalize, MAX_VARIANTS};
use super::{ArtifactKind, GenerationBackend, QualityScore, RefineContext, SynthError};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OfflineBackend {
    pub seed: u64,
}

impl OfflineBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn variant(&self, code: &str, k: usize) -> Option<String> {
        apply_variant(code, k, self.seed)
    }
}

fn scale(fraction: f64) -> u8 {
    let f = fraction.clamp(0.0, 1.0);
    1 + libm::round(4.0 * f) as u8
}

fn ratio_score(candidate: usize, reference: usize) -> u8 {
    let r = candidate as f64 / reference.max(1) as f64;
    match r {
        r if r <= 1.25 => 5,
        r if r <= 1.5 => 4,
        r if r <= 2.0 => 3,
        r if r <= 3.0 => 2,
        _ => 1,
    }
}

fn leading(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

fn maintainability(candidate: &str) -> u8 {
    let tabs = candidate.lines().any(|l| leading(l).contains('\t'));
    let comments = lex(candidate).iter().any(|t| t.kind == Kind::Comment);
    let trailing = candidate.lines().any(|l| l.len() != l.trim_end().len());
    5 - u8::from(tabs) - u8::from(comments) - u8::from(trailing)
}

fn body_lines(pseudo: &str) -> usize {
    pseudo.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with("FUNCTION")).count()
}

fn keyword_coverage(candidate: &str, reference: &str) -> f64 {
    let expected = keyword_profile(reference);
    if expected.is_empty() {
        return 1.0;
    }
    let mut found = keyword_profile(candidate);
    let mut hits = 0usize;
    for k in &expected {
        if let Some(pos) = found.iter().position(|f| f == k) {
            found.swap_remove(pos);
            hits += 1;
        }
    }
    hits as f64 / expected.len() as f64
}

fn non_space_len(s: &str) -> usize {
    s.chars().filter(|c| !c.is_whitespace()).count()
}

pub fn score_pseudocode(candidate: &str, code: &str) -> QualityScore {
    let reference = to_pseudocode(code);
    let readability = if candidate.lines().all(|l| !leading(l).contains('\t') && leading(l).len() % 4 == 0) {
        5
    } else {
        3
    };
    let correctness = scale(keyword_coverage(candidate, &reference));
    let expected_body = body_lines(&reference);
    let completeness = if expected_body == 0 {
        5
    } else {
        scale(body_lines(candidate) as f64 / expected_body as f64)
    };
    let conciseness = ratio_score(non_space_len(candidate), non_space_len(&reference));
    QualityScore {
        readability,
        correctness,
        completeness,
        conciseness,
        maintainability: maintainability(candidate),
    }
}

pub fn score_variant(candidate: &str, code: &str) -> QualityScore {
    let mixed = candidate.lines().any(|l| {
        let lead = leading(l);
        lead.contains('\t') && lead.contains(' ')
    });
    let readability = if mixed { 3 } else { 5 };
    let equivalent = normalize(candidate) == normalize(code);
    let correctness = if equivalent { 5 } else { 1 };
    let completeness = correctness;
    let conciseness = ratio_score(non_space_len(&strip_comments(candidate)), non_space_len(&strip_comments(code)));
    let trailing = candidate.lines().filter(|l| l.len() != l.trim_end().len()).count();
    let lines = candidate.lines().count().max(1);
    let maintainability = if 2 * trailing > lines { 4 } else { 5 };
    QualityScore { readability, correctness, completeness, conciseness, maintainability }
}

impl GenerationBackend for OfflineBackend {
    fn generate_pseudocode(&self, sample: &Sample) -> Result<String, SynthError> {
        Ok(to_pseudocode(&sample.code))
    }

    /// Variant `k` applies the `k`-th transform recipe; at most
    /// [`MAX_VARIANTS`] exist.
    fn generate_variants(&self, _pseudo_code: &str, original_code: &str, n: usize) -> Result<Vec<String>, SynthError> {
        Ok((1..=n.min(MAX_VARIANTS)).filter_map(|k| self.variant(original_code, k)).collect())
    }

    fn evaluate(&self, kind: ArtifactKind, candidate: &str, context: &RefineContext<'_>) -> Result<QualityScore, SynthError> {
        Ok(match kind {
            ArtifactKind::Pseudocode => score_pseudocode(candidate, context.code),
            ArtifactKind::Variant => score_variant(candidate, context.code),
        })
    }

    /// Regenerates from scratch; the offline generators have no other
    /// knob to turn.
    fn refine(
        &self,
        kind: ArtifactKind,
        candidate: &str,
        _score: &QualityScore,
        context: &RefineContext<'_>,
    ) -> Result<String, SynthError> {
        Ok(match kind {
            ArtifactKind::Pseudocode => to_pseudocode(context.code),
            ArtifactKind::Variant => context
                .variant_index
                .and_then(|k| self.variant(context.code, k))
                .unwrap_or_else(|| String::from(candidate)),
        })
    }
}
