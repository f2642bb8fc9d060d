//! Bounded-concurrency synthesis over a corpus with resumable output.

use std::collections::HashMap;

use pseudobridge_core::synth::{process_sample, GenerationBackend, PipelineReport, SynthError, DEFAULT_THRESHOLD};
use pseudobridge_core::Sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Style variants per sample.
    pub n: usize,
    /// Minimum rubric average for acceptance, in (1, 5].
    pub threshold: f64,
    /// Samples in flight at once.
    pub concurrency: usize,
    /// Samples processed between progress saves.
    pub save_every: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 4, threshold: DEFAULT_THRESHOLD, concurrency: 4, save_every: 64 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("synth.n must be at least 1".into());
        }
        if !(self.threshold > 1.0 && self.threshold <= 5.0) {
            return Err(format!("synth.threshold {} outside (1, 5]", self.threshold));
        }
        if self.concurrency == 0 || self.save_every == 0 {
            return Err("synth.concurrency and synth.save_every must be positive".into());
        }
        Ok(())
    }
}

/// Copies populated records from an earlier partial run onto `input`,
/// matching by id.
pub fn resume_from(input: &[Sample], previous: &[Sample]) -> Vec<Sample> {
    let done: HashMap<&str, &Sample> = previous.iter().filter(|s| s.is_populated()).map(|s| (s.id.as_str(), s)).collect();
    input.iter().map(|s| done.get(s.id.as_str()).map_or_else(|| s.clone(), |&d| d.clone())).collect()
}

/// Like the serial core pipeline, but runs up to `concurrency` samples at a
/// time and hands the whole corpus state to `save` after every chunk.
/// Output order and content do not depend on the concurrency level.
pub fn run_concurrent<B, E>(
    corpus: &[Sample],
    backend: &B,
    config: &SynthConfig,
    mut save: impl FnMut(&[Sample]) -> Result<(), E>,
) -> Result<(Vec<Sample>, PipelineReport), PipelineError<E>>
where
    B: GenerationBackend + Sync + ?Sized,
{
    config.validate().map_err(PipelineError::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.concurrency)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut report = PipelineReport { total: corpus.len(), ..PipelineReport::default() };
    let mut out: Vec<Sample> = corpus.to_vec();
    let pending: Vec<usize> = (0..corpus.len()).filter(|&i| !corpus[i].is_populated()).collect();
    report.already_populated = corpus.len() - pending.len();
    for chunk in pending.chunks(config.save_every) {
        let results: Vec<Result<(Sample, _), SynthError>> = pool.install(|| {
            chunk.par_iter().map(|&i| process_sample(&corpus[i], backend, config.n, config.threshold)).collect()
        });
        for (&i, result) in chunk.iter().zip(results) {
            match result {
                Ok((populated, outcome)) => {
                    report.record(&corpus[i].id, &Ok(outcome));
                    out[i] = populated;
                }
                Err(e) => report.record(&corpus[i].id, &Err(e)),
            }
        }
        save(&out).map_err(PipelineError::Save)?;
    }
    Ok((out, report))
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError<E> {
    #[error("invalid synthesis config: {0}")]
    Config(String),
    #[error("saving progress failed: {0}")]
    Save(E),
}

#[cfg(test)]
mod tests {
    use super::*;
    use pseudobridge_core::synth::{run_pipeline, OfflineBackend};
    use pseudobridge_core::toy::{toy_corpus, Dialect};

    #[test]
    fn matches_serial_pipeline_at_any_concurrency() {
        let corpus = toy_corpus(30, 2, Dialect::Python);
        let backend = OfflineBackend::new(5);
        let (serial, serial_report) = run_pipeline(&corpus, &backend, 3, 4.0).unwrap();
        for concurrency in [1, 4, 7] {
            let config = SynthConfig { n: 3, concurrency, save_every: 8, ..SynthConfig::default() };
            let mut saves = 0;
            let (out, report) = run_concurrent(&corpus, &backend, &config, |_| {
                saves += 1;
                Ok::<_, ()>(())
            })
            .unwrap();
            assert_eq!(out, serial);
            assert_eq!(report, serial_report);
            assert_eq!(saves, 4);
        }
    }

    #[test]
    fn resume_skips_finished_samples() {
        let corpus = toy_corpus(6, 0, Dialect::Python);
        let backend = OfflineBackend::new(0);
        let config = SynthConfig { save_every: 2, ..SynthConfig::default() };
        let mut snapshots = Vec::new();
        let (full, _) = run_concurrent(&corpus, &backend, &config, |s| {
            snapshots.push(s.to_vec());
            Ok::<_, ()>(())
        })
        .unwrap();
        let interrupted = &snapshots[0];
        let resumed = resume_from(&corpus, interrupted);
        assert_eq!(resumed.iter().filter(|s| s.is_populated()).count(), 2);
        let (again, report) = run_concurrent(&resumed, &backend, &config, |_| Ok::<_, ()>(())).unwrap();
        assert_eq!(report.already_populated, 2);
        assert_eq!(report.populated, 4);
        assert_eq!(again, full);
    }

    #[test]
    fn save_failure_stops_the_run() {
        let corpus = toy_corpus(4, 0, Dialect::Python);
        let err = run_concurrent(&corpus, &OfflineBackend::new(0), &SynthConfig::default(), |_| Err("disk full")).unwrap_err();
        assert!(matches!(err, PipelineError::Save("disk full")));
    }
}
