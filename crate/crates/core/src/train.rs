//! Two-stage contrastive training loops.

use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EncoderParams;
use crate::grad::{loss_and_grad, GradError, TextBatch};
use crate::loss::LossKind;
use crate::optim::{scheduled_lr, AdamState};
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("sample {id:?} is missing {field}")]
    MissingField { id: String, field: &'static str },
    #[error("invalid training config: {0}")]
    BadConfig(&'static str),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("step {step}: {source}")]
    Step { step: u64, source: GradError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub tau: f64,
    /// Style variants per sample used as extra stage-2 positives.
    pub variants: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 48,
            epochs: 3,
            learning_rate: 5e-5,
            warmup_fraction: 0.10,
            tau: 0.05,
            variants: 4,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::BadConfig("batch_size must be positive"));
        }
        if self.epochs == 0 {
            return Err(TrainError::BadConfig("epochs must be positive"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainError::BadConfig("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(TrainError::BadConfig("warmup_fraction must be in [0, 1)"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(TrainError::BadConfig("tau must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(TrainError::BadConfig("weight_decay must be non-negative"));
        }
        Ok(())
    }
}

/// One optimizer step as written to the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub stage: u8,
    pub epoch: usize,
    pub step: u64,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub params: EncoderParams,
    pub optimizer: AdamState,
    pub log: Vec<StepLog>,
}

impl TrainRun {
    /// Mean loss of each epoch, in order.
    pub fn epoch_means(&self) -> Vec<f64> {
        epoch_means(&self.log)
    }
}

pub fn epoch_means(log: &[StepLog]) -> Vec<f64> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for entry in log {
        if out.len() <= entry.epoch {
            out.resize(entry.epoch + 1, (0.0, 0));
        }
        out[entry.epoch].0 += entry.loss;
        out[entry.epoch].1 += 1;
    }
    out.into_iter().map(|(s, n)| s / n.max(1) as f64).collect()
}

fn missing(sample: &Sample, field: &'static str) -> TrainError {
    TrainError::MissingField { id: sample.id.clone(), field }
}

fn pseudo_of(sample: &Sample) -> Result<&str, TrainError> {
    sample.pseudo_code.as_deref().ok_or_else(|| missing(sample, "pseudo_code"))
}

/// Stage-2 positive set of a sample: the original code, then up to `n` variants.
pub fn positive_set(sample: &Sample, n: usize) -> Result<Vec<String>, TrainError> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(sample.code.clone());
    if n > 0 {
        let variants = sample.variants.as_deref().filter(|v| !v.is_empty()).ok_or_else(|| missing(sample, "variants"))?;
        out.extend(variants.iter().take(n).cloned());
    }
    Ok(out)
}

fn run<F>(
    stage: u8,
    kind: LossKind,
    n_samples: usize,
    mut params: EncoderParams,
    optimizer: Option<AdamState>,
    config: &TrainConfig,
    make_batch: F,
) -> Result<TrainRun, TrainError>
where
    F: Fn(&[usize]) -> TextBatch,
{
    config.validate()?;
    if n_samples == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let steps_per_epoch = n_samples.div_ceil(config.batch_size);
    let total = (steps_per_epoch * config.epochs) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (0x5eed_0000 + u64::from(stage)));
    let mut optimizer = match optimizer {
        Some(state) if state.first.len() == params.table.len() => state,
        Some(_) => return Err(TrainError::BadConfig("optimizer state does not match the parameter shape")),
        None => AdamState::new(&params, config.weight_decay),
    };
    let mut order: Vec<usize> = (0..n_samples).collect();
    let mut log = Vec::with_capacity(total as usize);
    let mut step = 0u64;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch = make_batch(chunk);
            let (loss, grad) =
                loss_and_grad(kind, &batch, &params, config.tau).map_err(|source| TrainError::Step { step, source })?;
            let lr = scheduled_lr(config.learning_rate, step, total, config.warmup_fraction);
            optimizer.step(&mut params, &grad, lr);
            log.push(StepLog { stage, epoch, step, loss, lr });
            step += 1;
        }
    }
    Ok(TrainRun { params, optimizer, log })
}

/// Aligns queries with pseudo-code over shuffled in-batch negatives.
pub fn train_stage1(corpus: &[Sample], params: EncoderParams, config: &TrainConfig) -> Result<TrainRun, TrainError> {
    let pseudo: Vec<&str> = corpus.iter().map(pseudo_of).collect::<Result<_, _>>()?;
    run(1, LossKind::Stage1, corpus.len(), params, None, config, |idx| {
        TextBatch::stage1(
            idx.iter().map(|&i| corpus[i].query.clone()).collect(),
            idx.iter().map(|&i| String::from(pseudo[i])).collect(),
        )
    })
}

/// Aligns pseudo-code with each sample's original code plus its style variants.
pub fn train_stage2(corpus: &[Sample], params: EncoderParams, config: &TrainConfig) -> Result<TrainRun, TrainError> {
    train_stage2_from(corpus, params, None, config)
}

/// Stage 2 resuming the optimizer moments of an earlier run.
pub fn train_stage2_from(
    corpus: &[Sample],
    params: EncoderParams,
    optimizer: Option<AdamState>,
    config: &TrainConfig,
) -> Result<TrainRun, TrainError> {
    let pseudo: Vec<&str> = corpus.iter().map(pseudo_of).collect::<Result<_, _>>()?;
    let positives: Vec<Vec<String>> =
        corpus.iter().map(|s| positive_set(s, config.variants)).collect::<Result<_, _>>()?;
    run(2, LossKind::Stage2, corpus.len(), params, optimizer, config, |idx| {
        TextBatch::stage2(
            idx.iter().map(|&i| String::from(pseudo[i])).collect(),
            idx.iter().map(|&i| positives[i].clone()).collect(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::tokenizer::Tokenizer;
    use alloc::format;
    use alloc::vec;

    fn params() -> EncoderParams {
        let config = EncoderConfig {
            tokenizer: Tokenizer { vocab_buckets: 512, max_len: 64, lowercase: true },
            dim: 16,
            init_scale: 1.0,
        };
        EncoderParams::init(&config, 3).unwrap()
    }

    fn corpus(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let mut s = Sample::new(format!("s{i}"), "python", format!("query word{i} topic{}", i % 3), format!("def f{i}(x): return x{i}"));
                s.pseudo_code = Some(format!("FUNCTION f{i}(x): RETURN x{i}"));
                s.variants = Some(vec![format!("def f{i}(v1): return x{i}")]);
                s
            })
            .collect()
    }

    #[test]
    fn small_corpus_runs_single_partial_batch() {
        let config = TrainConfig { batch_size: 48, epochs: 2, learning_rate: 1e-2, ..TrainConfig::default() };
        let run = train_stage1(&corpus(5), params(), &config).unwrap();
        assert_eq!(run.log.len(), 2);
        assert_eq!(run.optimizer.step, 2);
    }

    #[test]
    fn missing_pseudo_code_is_an_error() {
        let mut c = corpus(3);
        c[1].pseudo_code = None;
        let err = train_stage1(&c, params(), &TrainConfig::default()).unwrap_err();
        assert_eq!(err, TrainError::MissingField { id: "s1".into(), field: "pseudo_code" });
    }

    #[test]
    fn zero_variants_uses_original_code_only() {
        let mut c = corpus(4);
        c.iter_mut().for_each(|s| s.variants = None);
        let config = TrainConfig { variants: 0, batch_size: 2, epochs: 1, learning_rate: 1e-2, ..TrainConfig::default() };
        assert_eq!(positive_set(&c[0], 0).unwrap(), vec![c[0].code.clone()]);
        assert!(train_stage2(&c, params(), &config).is_ok());
        let config = TrainConfig { variants: 2, ..config };
        assert!(matches!(train_stage2(&c, params(), &config), Err(TrainError::MissingField { field: "variants", .. })));
    }

    #[test]
    fn deterministic_under_seed() {
        let config = TrainConfig { batch_size: 4, epochs: 2, learning_rate: 1e-2, seed: 9, ..TrainConfig::default() };
        let a = train_stage2(&corpus(10), params(), &config).unwrap();
        let b = train_stage2(&corpus(10), params(), &config).unwrap();
        assert_eq!(a.params.to_bytes(), b.params.to_bytes());
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig { warmup_fraction: 1.0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn epoch_means_average_steps() {
        let log = vec![
            StepLog { stage: 1, epoch: 0, step: 0, loss: 2.0, lr: 1.0 },
            StepLog { stage: 1, epoch: 0, step: 1, loss: 4.0, lr: 1.0 },
            StepLog { stage: 1, epoch: 1, step: 2, loss: 1.0, lr: 1.0 },
        ];
        assert_eq!(epoch_means(&log), vec![3.0, 1.0]);
    }
}
