//! TOML tool configuration, flag overrides, and validation.

use std::path::{Path, PathBuf};

use pseudobridge_core::corpus::FilterConfig;
use pseudobridge_core::experiment::Arm;
use pseudobridge_core::{EncoderConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::pipeline::SynthConfig;
use crate::remote::RemoteConfig;
use crate::search::DEFAULT_BLOCK_ROWS;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Offline,
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub remote: RemoteConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Raw corpus for experiments that filter, synthesize, and split.
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub zero_shot: Vec<PathBuf>,
    pub train_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { input: None, train: None, test: None, zero_shot: Vec::new(), train_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: Vec<usize>,
    /// Cap on candidates per language.
    pub max_pool: Option<usize>,
    pub block_rows: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k: vec![1, 5, 10], max_pool: None, block_rows: DEFAULT_BLOCK_ROWS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub arms: Vec<Arm>,
    /// Size of the generated corpus when no corpus paths are configured.
    pub toy_samples: usize,
    /// Size of the generated JavaScript zero-shot set when none is configured.
    pub toy_zero_shot: usize,
    /// Also evaluate on the test split with restyled code.
    pub styled_test: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { arms: Arm::ALL.to_vec(), toy_samples: 500, toy_zero_shot: 100, styled_test: true }
    }
}

/// Everything a run needs. The top-level `seed` drives the split, the
/// offline backend, initialization, and batch order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub corpus: CorpusConfig,
    pub filter: FilterConfig,
    pub backend: BackendConfig,
    pub synth: SynthConfig,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub experiment: ExperimentConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub n: Option<usize>,
    pub threshold: Option<f64>,
    pub k: Option<Vec<usize>>,
    pub arms: Option<Vec<Arm>>,
}

impl ToolConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut config = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.out_dir.iter_mut().for_each(fix);
        self.corpus.input.iter_mut().for_each(fix);
        self.corpus.train.iter_mut().for_each(fix);
        self.corpus.test.iter_mut().for_each(fix);
        self.corpus.zero_shot.iter_mut().for_each(fix);
        self.backend.remote.template_dir.iter_mut().for_each(fix);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out_dir = Some(out.clone());
        }
        if let Some(kind) = o.backend {
            self.backend.kind = kind;
        }
        if let Some(n) = o.n {
            self.synth.n = n;
        }
        if let Some(t) = o.threshold {
            self.synth.threshold = t;
        }
        if let Some(k) = &o.k {
            self.eval.k = k.clone();
        }
        if let Some(arms) = &o.arms {
            self.experiment.arms = arms.clone();
        }
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), String> {
        self.train.validate().map_err(|e| e.to_string())?;
        self.synth.validate()?;
        if self.encoder.dim < 2 {
            return Err("encoder.dim must be at least 2".into());
        }
        if self.encoder.tokenizer.vocab_buckets == 0 || self.encoder.tokenizer.max_len == 0 {
            return Err("encoder.vocab_buckets and encoder.max_len must be positive".into());
        }
        if !(self.encoder.init_scale > 0.0 && self.encoder.init_scale.is_finite()) {
            return Err("encoder.init_scale must be positive".into());
        }
        if self.eval.k.is_empty() || self.eval.k.contains(&0) {
            return Err("eval.k must list positive cutoffs".into());
        }
        if self.eval.block_rows == 0 {
            return Err("eval.block_rows must be positive".into());
        }
        if !(self.corpus.train_fraction > 0.0 && self.corpus.train_fraction < 1.0) {
            return Err(format!("corpus.train_fraction {} outside (0, 1)", self.corpus.train_fraction));
        }
        if self.train.variants > self.synth.n {
            return Err(format!("train.variants {} exceeds synth.n {}", self.train.variants, self.synth.n));
        }
        if self.experiment.arms.is_empty() {
            return Err("experiment.arms is empty".into());
        }
        for path in [&self.corpus.input, &self.corpus.train, &self.corpus.test].into_iter().flatten().chain(&self.corpus.zero_shot) {
            if !path.exists() {
                return Err(format!("corpus file {} does not exist", path.display()));
            }
        }
        if self.corpus.train.is_some() != self.corpus.test.is_some() {
            return Err("corpus.train and corpus.test must be given together".into());
        }
        if self.backend.kind == BackendKind::Remote && self.backend.remote.base_url.trim().is_empty() {
            return Err("backend.remote.base_url is empty".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("tool config serializes to TOML")
    }

    /// The configuration as echoed into reports; the output directory is
    /// left out so relocated runs produce identical files.
    pub fn echo(&self) -> Self {
        Self { out_dir: None, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_published_setup() {
        let c = ToolConfig::default();
        assert_eq!(c.train.batch_size, 48);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, 5e-5);
        assert_eq!(c.train.tau, 0.05);
        assert_eq!(c.synth.n, 4);
        assert_eq!(c.synth.threshold, 4.0);
        assert_eq!(c.synth.concurrency, 4);
        assert_eq!(c.encoder.dim, 128);
        assert_eq!(c.encoder.tokenizer.vocab_buckets, 32768);
        assert_eq!(c.experiment.arms.len(), 4);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn sections_parse_and_flags_win() {
        let text = r#"
seed = 3
[train]
learning_rate = 0.01
[synth]
n = 2
[encoder]
dim = 32
vocab_buckets = 1024
[backend]
kind = "remote"
[backend.remote]
base_url = "http://127.0.0.1:9"
max_retries = 1
[experiment]
arms = ["full", "wo_code_style"]
"#;
        let mut c = ToolConfig::from_toml(text).unwrap();
        assert_eq!(c.encoder.dim, 32);
        assert_eq!(c.encoder.tokenizer.vocab_buckets, 1024);
        assert_eq!(c.backend.kind, BackendKind::Remote);
        assert_eq!(c.backend.remote.max_retries, 1);
        assert_eq!(c.experiment.arms, [Arm::Full, Arm::WoCodeStyle]);
        c.apply(&Overrides { seed: Some(9), n: Some(4), k: Some(vec![1, 3]), ..Overrides::default() });
        assert_eq!((c.seed, c.train.seed, c.synth.n, c.eval.k.clone()), (9, 9, 4, vec![1, 3]));
        assert_eq!(c.train.learning_rate, 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ToolConfig::from_toml("[train]\nlr = 1").is_err());
        assert!(ToolConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = ToolConfig::default();
        c.corpus.zero_shot = vec!["a.jsonl".into()];
        c.eval.max_pool = Some(10);
        let back = ToolConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ToolConfig::default();
        c.synth.threshold = 1.0;
        assert!(c.validate().is_err());
        let mut c = ToolConfig::default();
        c.train.variants = 5;
        assert!(c.validate().unwrap_err().contains("exceeds"));
        let mut c = ToolConfig::default();
        c.corpus.train = Some("/nonexistent/train.jsonl".into());
        assert!(c.validate().is_err());
    }
}
