//! Pseudo-code and style-variant synthesis behind a pluggable backend, gated
//! by the evaluate-refine loop.

pub mod lexer;
pub mod offline;
pub mod pseudocode;
pub mod style;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::{Provenance, Sample};

pub use offline::OfflineBackend;
pub use style::normalize;

/// Evaluations allowed per artifact, counting the first.
pub const MAX_ITERATIONS: u32 = 3;

pub const DEFAULT_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Pseudocode,
    Variant,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("sample field {0} is empty")]
    EmptyInput(&'static str),
    #[error("backend returned an empty generation")]
    EmptyGeneration,
    #[error("threshold {0} outside (1, 5]")]
    InvalidThreshold(String),
    #[error("variant count must be at least 1")]
    InvalidVariantCount,
    #[error("transport failed after {attempts} attempts{}: {message}", status.map(|s| alloc::format!(" (last status {s})")).unwrap_or_default())]
    Transport { attempts: u32, status: Option<u16>, message: String },
    #[error("unparseable score payload: {0}")]
    ScorePayload(String),
    #[error("score dimension {name} = {value} outside 1..=5")]
    ScoreRange { name: &'static str, value: i64 },
}

/// Five-dimension rubric, each dimension in 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityScore {
    pub readability: u8,
    pub correctness: u8,
    pub completeness: u8,
    pub conciseness: u8,
    pub maintainability: u8,
}

impl QualityScore {
    pub const DIMENSIONS: [&'static str; 5] =
        ["readability", "correctness", "completeness", "conciseness", "maintainability"];

    pub fn new(values: [i64; 5]) -> Result<Self, SynthError> {
        for (name, &value) in Self::DIMENSIONS.iter().zip(&values) {
            if !(1..=5).contains(&value) {
                return Err(SynthError::ScoreRange { name, value });
            }
        }
        let [readability, correctness, completeness, conciseness, maintainability] = values.map(|v| v as u8);
        Ok(Self { readability, correctness, completeness, conciseness, maintainability })
    }

    pub fn uniform(value: u8) -> Self {
        Self::new([i64::from(value); 5]).expect("uniform score in range")
    }

    pub fn values(&self) -> [u8; 5] {
        [self.readability, self.correctness, self.completeness, self.conciseness, self.maintainability]
    }

    pub fn total(&self) -> u32 {
        self.values().iter().map(|&v| u32::from(v)).sum()
    }

    /// Arithmetic mean; exact since the total is an integer below 26.
    pub fn average(&self) -> f64 {
        f64::from(self.total()) / 5.0
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        Self::new(self.values().map(i64::from)).map(|_| ())
    }
}

/// What the backend knows about the artifact under review.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineContext<'a> {
    pub query: &'a str,
    pub code: &'a str,
    pub pseudo_code: Option<&'a str>,
    /// 1-based position of the variant being produced.
    pub variant_index: Option<usize>,
}

impl<'a> RefineContext<'a> {
    pub fn for_sample(sample: &'a Sample) -> Self {
        Self { query: &sample.query, code: &sample.code, pseudo_code: sample.pseudo_code.as_deref(), variant_index: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineLoopState {
    pub iteration: u32,
    pub history: Vec<(String, QualityScore)>,
    pub accepted: bool,
    pub forced: bool,
}

impl RefineLoopState {
    pub fn best(&self) -> Option<&(String, QualityScore)> {
        // first of the highest-scoring candidates
        self.history.iter().rev().max_by_key(|(_, s)| s.total())
    }
}

pub trait GenerationBackend {
    fn generate_pseudocode(&self, sample: &Sample) -> Result<String, SynthError>;

    /// Up to `n` candidate rewrites of `original_code` guided by `pseudo_code`.
    fn generate_variants(&self, pseudo_code: &str, original_code: &str, n: usize) -> Result<Vec<String>, SynthError>;

    fn evaluate(&self, kind: ArtifactKind, candidate: &str, context: &RefineContext<'_>) -> Result<QualityScore, SynthError>;

    fn refine(
        &self,
        kind: ArtifactKind,
        candidate: &str,
        score: &QualityScore,
        context: &RefineContext<'_>,
    ) -> Result<String, SynthError>;
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for &B {
    fn generate_pseudocode(&self, sample: &Sample) -> Result<String, SynthError> {
        (**self).generate_pseudocode(sample)
    }

    fn generate_variants(&self, pseudo_code: &str, original_code: &str, n: usize) -> Result<Vec<String>, SynthError> {
        (**self).generate_variants(pseudo_code, original_code, n)
    }

    fn evaluate(&self, kind: ArtifactKind, candidate: &str, context: &RefineContext<'_>) -> Result<QualityScore, SynthError> {
        (**self).evaluate(kind, candidate, context)
    }

    fn refine(
        &self,
        kind: ArtifactKind,
        candidate: &str,
        score: &QualityScore,
        context: &RefineContext<'_>,
    ) -> Result<String, SynthError> {
        (**self).refine(kind, candidate, score, context)
    }
}

fn check_sample(sample: &Sample) -> Result<(), SynthError> {
    if sample.query.trim().is_empty() {
        return Err(SynthError::EmptyInput("query"));
    }
    if sample.code.trim().is_empty() {
        return Err(SynthError::EmptyInput("code"));
    }
    Ok(())
}

fn check_threshold(threshold: f64) -> Result<(), SynthError> {
    if threshold > 1.0 && threshold <= 5.0 {
        Ok(())
    } else {
        Err(SynthError::InvalidThreshold(threshold.to_string()))
    }
}

pub fn generate_pseudocode<B: GenerationBackend + ?Sized>(sample: &Sample, backend: &B) -> Result<String, SynthError> {
    check_sample(sample)?;
    let out = backend.generate_pseudocode(sample)?;
    if out.trim().is_empty() {
        return Err(SynthError::EmptyGeneration);
    }
    Ok(out)
}

pub fn evaluate_candidate<B: GenerationBackend + ?Sized>(
    kind: ArtifactKind,
    candidate: &str,
    context: &RefineContext<'_>,
    backend: &B,
) -> Result<QualityScore, SynthError> {
    if candidate.trim().is_empty() {
        return Err(SynthError::EmptyGeneration);
    }
    let score = backend.evaluate(kind, candidate, context)?;
    score.validate()?;
    Ok(score)
}

/// Scores `initial`, refining until the average reaches `threshold` or
/// three evaluations have happened; in the latter case the best candidate
/// seen is returned with `forced` set.
pub fn refine_loop<B: GenerationBackend + ?Sized>(
    kind: ArtifactKind,
    initial: &str,
    context: &RefineContext<'_>,
    backend: &B,
    threshold: f64,
) -> Result<(String, RefineLoopState), SynthError> {
    check_threshold(threshold)?;
    let mut state = RefineLoopState::default();
    let mut candidate = String::from(initial);
    loop {
        let score = evaluate_candidate(kind, &candidate, context, backend)?;
        state.iteration += 1;
        state.history.push((candidate.clone(), score));
        if score.average() >= threshold {
            state.accepted = true;
            return Ok((candidate, state));
        }
        if state.iteration >= MAX_ITERATIONS {
            break;
        }
        candidate = backend.refine(kind, &candidate, &score, context)?;
    }
    state.forced = true;
    let best = state.best().map(|(text, _)| text.clone()).unwrap_or(candidate);
    Ok((best, state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSet {
    pub variants: Vec<String>,
    pub states: Vec<RefineLoopState>,
    /// False when fewer than `n` distinct variants survived.
    pub complete: bool,
}

pub fn generate_variants<B: GenerationBackend + ?Sized>(
    pseudo_code: &str,
    original_code: &str,
    query: &str,
    n: usize,
    backend: &B,
    threshold: f64,
) -> Result<VariantSet, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidVariantCount);
    }
    if pseudo_code.trim().is_empty() {
        return Err(SynthError::EmptyInput("pseudo_code"));
    }
    check_threshold(threshold)?;
    let candidates = backend.generate_variants(pseudo_code, original_code, n)?;
    let mut variants: Vec<String> = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for (i, candidate) in candidates.into_iter().take(n).enumerate() {
        if candidate.trim().is_empty() {
            continue;
        }
        let context =
            RefineContext { query, code: original_code, pseudo_code: Some(pseudo_code), variant_index: Some(i + 1) };
        let (text, state) = refine_loop(ArtifactKind::Variant, &candidate, &context, backend, threshold)?;
        states.push(state);
        if text != original_code && !variants.contains(&text) {
            variants.push(text);
        }
    }
    let complete = variants.len() == n;
    Ok(VariantSet { variants, states, complete })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub pseudo_state: RefineLoopState,
    pub variant_states: Vec<RefineLoopState>,
    pub complete: bool,
}

impl SampleOutcome {
    pub fn forced_count(&self) -> usize {
        usize::from(self.pseudo_state.forced) + self.variant_states.iter().filter(|s| s.forced).count()
    }
}

/// Runs the full synthesis for one sample and returns the populated copy.
pub fn process_sample<B: GenerationBackend + ?Sized>(
    sample: &Sample,
    backend: &B,
    n: usize,
    threshold: f64,
) -> Result<(Sample, SampleOutcome), SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidVariantCount);
    }
    check_threshold(threshold)?;
    let draft = generate_pseudocode(sample, backend)?;
    let context = RefineContext::for_sample(sample);
    let (pseudo, pseudo_state) = refine_loop(ArtifactKind::Pseudocode, &draft, &context, backend, threshold)?;
    let set = generate_variants(&pseudo, &sample.code, &sample.query, n, backend, threshold)?;
    if set.variants.is_empty() {
        return Err(SynthError::EmptyGeneration);
    }
    let mut out = sample.clone();
    out.pseudo_code = Some(pseudo);
    out.variants = Some(set.variants);
    out.provenance = Provenance::Synthesized;
    Ok((out, SampleOutcome { pseudo_state, variant_states: set.states, complete: set.complete }))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub total: usize,
    pub populated: usize,
    pub already_populated: usize,
    /// Samples that ended with fewer than `n` distinct variants.
    pub partial: Vec<String>,
    /// Artifacts emitted at the iteration cap without passing.
    pub forced: usize,
    /// `(id, error)` for samples left untouched after a failure.
    pub failures: Vec<(String, String)>,
}

impl PipelineReport {
    pub fn record(&mut self, id: &str, result: &Result<SampleOutcome, SynthError>) {
        match result {
            Ok(outcome) => {
                self.populated += 1;
                self.forced += outcome.forced_count();
                if !outcome.complete {
                    self.partial.push(String::from(id));
                }
            }
            Err(e) => self.failures.push((String::from(id), e.to_string())),
        }
    }
}

/// Populates every sample that still lacks synthesis output. Failing samples
/// are kept unchanged and listed in the report.
pub fn run_pipeline<B: GenerationBackend + ?Sized>(
    corpus: &[Sample],
    backend: &B,
    n: usize,
    threshold: f64,
) -> Result<(Vec<Sample>, PipelineReport), SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidVariantCount);
    }
    check_threshold(threshold)?;
    let mut report = PipelineReport { total: corpus.len(), ..PipelineReport::default() };
    let mut out = Vec::with_capacity(corpus.len());
    for sample in corpus {
        if sample.is_populated() {
            report.already_populated += 1;
            out.push(sample.clone());
            continue;
        }
        match process_sample(sample, backend, n, threshold) {
            Ok((populated, outcome)) => {
                report.record(&sample.id, &Ok(outcome));
                out.push(populated);
            }
            Err(e) => {
                report.record(&sample.id, &Err(e));
                out.push(sample.clone());
            }
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::cell::Cell;

    struct Scripted {
        scores: Vec<u8>,
        calls: Cell<usize>,
    }

    impl GenerationBackend for Scripted {
        fn generate_pseudocode(&self, _: &Sample) -> Result<String, SynthError> {
            Ok(String::from("draft"))
        }
        fn generate_variants(&self, _: &str, code: &str, n: usize) -> Result<Vec<String>, SynthError> {
            Ok((0..n).map(|i| alloc::format!("{code}#{i}")).collect())
        }
        fn evaluate(&self, _: ArtifactKind, _: &str, _: &RefineContext<'_>) -> Result<QualityScore, SynthError> {
            let i = self.calls.get();
            self.calls.set(i + 1);
            Ok(QualityScore::uniform(self.scores[i.min(self.scores.len() - 1)]))
        }
        fn refine(&self, _: ArtifactKind, c: &str, _: &QualityScore, _: &RefineContext<'_>) -> Result<String, SynthError> {
            Ok(alloc::format!("{c}+"))
        }
    }

    fn ctx() -> RefineContext<'static> {
        RefineContext { query: "q", code: "c", pseudo_code: None, variant_index: None }
    }

    #[test]
    fn average_is_mean() {
        let s = QualityScore::new([5, 4, 5, 4, 5]).unwrap();
        assert_eq!(s.average(), 4.6);
        assert!(QualityScore::new([0, 4, 5, 4, 5]).is_err());
        assert!(QualityScore::new([6, 4, 5, 4, 5]).is_err());
    }

    #[test]
    fn forced_at_cap() {
        let b = Scripted { scores: alloc::vec![2], calls: Cell::new(0) };
        let (text, state) = refine_loop(ArtifactKind::Pseudocode, "x", &ctx(), &b, 4.0).unwrap();
        assert_eq!(state.iteration, 3);
        assert!(state.forced && !state.accepted);
        assert_eq!(state.history.len(), 3);
        assert_eq!(text, "x");
    }

    #[test]
    fn best_candidate_wins_when_forced() {
        let b = Scripted { scores: alloc::vec![2, 3, 1], calls: Cell::new(0) };
        let (text, state) = refine_loop(ArtifactKind::Pseudocode, "x", &ctx(), &b, 4.0).unwrap();
        assert!(state.forced);
        assert_eq!(text, "x+");
    }

    #[test]
    fn accepts_second_candidate() {
        let b = Scripted { scores: alloc::vec![3, 4], calls: Cell::new(0) };
        let (text, state) = refine_loop(ArtifactKind::Variant, "x", &ctx(), &b, 4.0).unwrap();
        assert_eq!((state.iteration, state.accepted, state.forced), (2, true, false));
        assert_eq!(state.history.len(), 2);
        assert_eq!(text, "x+");
    }

    #[test]
    fn threshold_bounds() {
        let b = Scripted { scores: alloc::vec![5], calls: Cell::new(0) };
        for bad in [1.0, 0.5, 5.5, f64::NAN] {
            assert!(matches!(
                refine_loop(ArtifactKind::Variant, "x", &ctx(), &b, bad),
                Err(SynthError::InvalidThreshold(_))
            ));
        }
        assert!(refine_loop(ArtifactKind::Variant, "x", &ctx(), &b, 5.0).unwrap().1.accepted);
    }

    #[test]
    fn transport_error_message() {
        let e = SynthError::Transport { attempts: 4, status: Some(503), message: String::from("unavailable") };
        assert_eq!(e.to_string(), "transport failed after 4 attempts (last status 503): unavailable");
    }
}
