//! Ablation experiment: data preparation, per-arm training, reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pseudobridge_core::corpus::{filter_corpus, split_corpus};
use pseudobridge_core::experiment::{perturb_corpus, train_arm, Arm, ArmRun};
use pseudobridge_core::metrics::{evaluate_with, EvalOptions, EvalReport, Evaluation};
use pseudobridge_core::synth::{run_pipeline, OfflineBackend, PipelineReport};
use pseudobridge_core::toy::{toy_corpus, Dialect};
use pseudobridge_core::train::{epoch_means, TrainConfig};
use pseudobridge_core::{EncoderParams, Sample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BackendKind, ToolConfig};
use crate::error::ToolError;
use crate::io::{self, load_jsonl};
use crate::pipeline::run_concurrent;
use crate::remote::RemoteBackend;
use crate::templates::Templates;

pub const VERSION: &str = match option_env!("PSEUDOBRIDGE_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

/// Seed offset of the generated zero-shot set, keeping it apart from the
/// training corpus stream.
const ZERO_SHOT_SEED_OFFSET: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub test_styled: Option<Vec<Sample>>,
    /// `(name, corpus)` in configuration order.
    pub zero_shot: Vec<(String, Vec<Sample>)>,
    pub synthesis: Option<PipelineReport>,
}

/// Report file contents: the evaluation plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: String,
    pub arm: String,
    pub split: String,
    #[serde(flatten)]
    pub report: EvalReport,
    pub config: ToolConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub mrr: BTreeMap<String, f64>,
    pub stage1_epoch_loss: Vec<f64>,
    pub stage2_epoch_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmOutcome {
    pub run: ArmRun,
    /// `(split name, evaluation)`: `test`, then `test_styled`, then
    /// `zero_shot_<name>` per zero-shot set.
    pub evaluations: Vec<(String, Evaluation)>,
}

impl ArmOutcome {
    pub fn mrr(&self, split: &str) -> Option<f64> {
        self.evaluations.iter().find(|(s, _)| s == split).map(|(_, e)| e.report.mrr)
    }

    pub fn summary(&self) -> ArmSummary {
        ArmSummary {
            mrr: self.evaluations.iter().map(|(s, e)| (s.clone(), e.report.mrr)).collect(),
            stage1_epoch_loss: epoch_means(&self.run.stage1_log),
            stage2_epoch_loss: epoch_means(&self.run.stage2_log),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// Untrained initialization, same splits as the arms.
    pub baseline: Vec<(String, Evaluation)>,
    pub arms: BTreeMap<Arm, ArmOutcome>,
}

fn load(path: &Path) -> Result<Vec<Sample>, ToolError> {
    load_jsonl(path).map_err(ToolError::invalid)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "zero_shot".into(), |s| s.to_string_lossy().into_owned())
}

fn synthesize(corpus: &[Sample], config: &ToolConfig) -> Result<(Vec<Sample>, PipelineReport), ToolError> {
    match config.backend.kind {
        BackendKind::Offline => {
            run_pipeline(corpus, &OfflineBackend::new(config.seed), config.synth.n, config.synth.threshold)
                .map_err(ToolError::invalid)
        }
        BackendKind::Remote => {
            let templates = Templates::load(config.backend.remote.template_dir.as_deref()).map_err(ToolError::invalid)?;
            let backend = RemoteBackend::new(config.backend.remote.clone(), templates);
            run_concurrent(corpus, &backend, &config.synth, |_| Ok::<_, ToolError>(())).map_err(ToolError::runtime)
        }
    }
}

/// Loads or builds the splits. Without corpus paths, a generated Python
/// corpus is synthesized offline and split, and a generated JavaScript set
/// serves as the zero-shot corpus.
pub fn prepare(config: &ToolConfig) -> Result<ExperimentData, ToolError> {
    let seed = config.seed;
    let (train, test, synthesis) = match (&config.corpus.train, &config.corpus.test, &config.corpus.input) {
        (Some(train), Some(test), _) => (load(train)?, load(test)?, None),
        (_, _, input) => {
            let raw = match input {
                Some(path) => filter_corpus(&load(path)?, &config.filter).0,
                None => toy_corpus(config.experiment.toy_samples, seed, Dialect::Python),
            };
            let (populated, report) = synthesize(&raw, config)?;
            let (train, test) = split_corpus(&populated, config.corpus.train_fraction, seed).map_err(ToolError::invalid)?;
            (train, test, Some(report))
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(ToolError::Invalid("train and test splits must both be non-empty".into()));
    }
    let zero_shot = if config.corpus.zero_shot.is_empty() {
        if config.experiment.toy_zero_shot == 0 {
            Vec::new()
        } else {
            let js = toy_corpus(config.experiment.toy_zero_shot, seed + ZERO_SHOT_SEED_OFFSET, Dialect::JavaScript);
            vec![(Dialect::JavaScript.language().to_string(), js)]
        }
    } else {
        config.corpus.zero_shot.iter().map(|p| Ok((stem(p), load(p)?))).collect::<Result<_, ToolError>>()?
    };
    let test_styled = config.experiment.styled_test.then(|| perturb_corpus(&test, seed));
    Ok(ExperimentData { train, test, test_styled, zero_shot, synthesis })
}

fn splits(data: &ExperimentData) -> Vec<(String, &[Sample])> {
    let mut out: Vec<(String, &[Sample])> = vec![("test".into(), &data.test)];
    if let Some(styled) = &data.test_styled {
        out.push(("test_styled".into(), styled));
    }
    for (name, corpus) in &data.zero_shot {
        out.push((format!("zero_shot_{name}"), corpus));
    }
    out
}

fn evaluate_all(params: &EncoderParams, data: &ExperimentData, config: &ToolConfig) -> Result<Vec<(String, Evaluation)>, ToolError> {
    let options = EvalOptions { max_pool: config.eval.max_pool };
    splits(data)
        .into_iter()
        .map(|(name, corpus)| Ok((name, evaluate_with(params, corpus, &config.eval.k, &options).map_err(ToolError::runtime)?)))
        .collect()
}

/// Trains and evaluates every configured arm from one shared initialization.
/// Arms run in parallel; each is a pure function of its inputs.
pub fn run_arms(data: &ExperimentData, config: &ToolConfig) -> Result<ExperimentOutcome, ToolError> {
    let init = EncoderParams::init(&config.encoder, config.seed).map_err(ToolError::invalid)?;
    let baseline = evaluate_all(&init, data, config)?;
    let train_config = TrainConfig { seed: config.seed, ..config.train.clone() };
    let arms: Vec<Arm> = {
        let mut a = config.experiment.arms.clone();
        a.sort();
        a.dedup();
        a
    };
    let outcomes: Vec<(Arm, ArmOutcome)> = arms
        .par_iter()
        .map(|&arm| {
            let run = train_arm(arm, &data.train, init.clone(), &train_config).map_err(ToolError::invalid)?;
            let evaluations = evaluate_all(&run.params, data, config)?;
            Ok((arm, ArmOutcome { run, evaluations }))
        })
        .collect::<Result<_, ToolError>>()?;
    Ok(ExperimentOutcome { baseline, arms: outcomes.into_iter().collect() })
}

fn write_evaluations(dir: &Path, label: &str, evaluations: &[(String, Evaluation)], echo: &ToolConfig) -> Result<(), ToolError> {
    io::create_dir(dir)?;
    for (split, e) in evaluations {
        let file = ReportFile {
            version: VERSION.into(),
            arm: label.into(),
            split: split.clone(),
            report: e.report.clone(),
            config: echo.clone(),
        };
        io::write_json(&dir.join(format!("report_{split}.json")), &file)?;
        io::write_atomic(&dir.join(format!("ranks_{split}.csv")), &io::rank_csv(&e.rows))?;
    }
    Ok(())
}

/// Writes `<out>/<arm>/{checkpoint/, metrics.jsonl, report_*.json,
/// ranks_*.csv}`, the untrained baseline under `<out>/untrained/`, a
/// `summary.json`, and the resolved configuration.
pub fn write_outcome(out: &Path, outcome: &ExperimentOutcome, data: &ExperimentData, config: &ToolConfig) -> Result<(), ToolError> {
    io::create_dir(out)?;
    let echo = config.echo();
    write_evaluations(&out.join("untrained"), "untrained", &outcome.baseline, &echo)?;
    let mut summary = BTreeMap::new();
    for (arm, o) in &outcome.arms {
        let dir = out.join(arm.name());
        write_evaluations(&dir, arm.name(), &o.evaluations, &echo)?;
        let optimizer = o.run.optimizer.as_ref();
        io::save_checkpoint(&dir.join("checkpoint"), &o.run.params, optimizer)?;
        let mut log = o.run.stage1_log.clone();
        log.extend(o.run.stage2_log.iter().cloned());
        io::write_atomic(&dir.join("metrics.jsonl"), io::step_log_jsonl(&log).as_bytes())?;
        summary.insert(arm.name().to_string(), o.summary());
    }
    io::write_json(&out.join("summary.json"), &summary)?;
    if let Some(report) = &data.synthesis {
        io::write_json(&out.join("synth_report.json"), report)?;
    }
    io::write_atomic(&out.join("resolved_config.toml"), config.to_toml().as_bytes())?;
    Ok(())
}

/// Full experiment: prepare, train all arms, write everything under `out`.
pub fn run_experiment(config: &ToolConfig, out: &Path) -> Result<ExperimentOutcome, ToolError> {
    config.validate().map_err(ToolError::Invalid)?;
    let data = prepare(config)?;
    let outcome = run_arms(&data, config)?;
    write_outcome(out, &outcome, &data, config)?;
    Ok(outcome)
}

/// The configuration used by the desk-scale acceptance run: the generated
/// corpus, the default batch size, epochs, temperature and variant count,
/// and a learning rate suited to a table trained from scratch.
pub fn desk_config(seed: u64) -> ToolConfig {
    let mut c = ToolConfig { seed, ..ToolConfig::default() };
    c.train.learning_rate = 1e-2;
    c.train.seed = seed;
    c
}

pub fn arm_dir(out: &Path, arm: Arm) -> PathBuf {
    out.join(arm.name())
}
