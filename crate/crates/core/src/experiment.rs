//! Ablation arms and the desk-scale experiment built from them.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;
use crate::optim::AdamState;
use crate::sample::Sample;
use crate::synth::style::apply_variant;
use crate::train::{train_stage1, train_stage2_from, StepLog, TrainConfig, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Full,
    WoStage1,
    WoStage2,
    WoCodeStyle,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Full, Arm::WoStage1, Arm::WoStage2, Arm::WoCodeStyle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::WoStage1 => "wo_stage1",
            Self::WoStage2 => "wo_stage2",
            Self::WoCodeStyle => "wo_code_style",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn runs_stage1(self) -> bool {
        self != Self::WoStage1
    }

    pub fn runs_stage2(self) -> bool {
        self != Self::WoStage2
    }

    /// Style variants used as stage-2 positives.
    pub fn variants(self, configured: usize) -> usize {
        if self == Self::WoCodeStyle {
            0
        } else {
            configured
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmRun {
    pub arm: Arm,
    pub params: EncoderParams,
    /// Optimizer state after the last stage that ran.
    pub optimizer: Option<AdamState>,
    pub stage1_log: Vec<StepLog>,
    pub stage2_log: Vec<StepLog>,
}

/// Trains `arm` from `init`; stage 2 starts from stage 1's output.
pub fn train_arm(arm: Arm, train: &[Sample], init: EncoderParams, config: &TrainConfig) -> Result<ArmRun, TrainError> {
    let mut params = init;
    let mut optimizer = None;
    let mut stage1_log = Vec::new();
    let mut stage2_log = Vec::new();
    if arm.runs_stage1() {
        let run = train_stage1(train, params, config)?;
        params = run.params;
        optimizer = Some(run.optimizer);
        stage1_log = run.log;
    }
    if arm.runs_stage2() {
        let stage2 = TrainConfig { variants: arm.variants(config.variants), ..config.clone() };
        let run = train_stage2_from(train, params, optimizer, &stage2)?;
        params = run.params;
        optimizer = Some(run.optimizer);
        stage2_log = run.log;
    }
    Ok(ArmRun { arm, params, optimizer, stage1_log, stage2_log })
}

/// Restyles each sample's code with transform recipe `(i mod 4) + 1`.
pub fn perturb_corpus(corpus: &[Sample], seed: u64) -> Vec<Sample> {
    corpus
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut out = s.clone();
            out.code = apply_variant(&s.code, i % 4 + 1, seed).unwrap_or_else(|| String::from(&s.code));
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::style::normalize;
    use crate::toy::{toy_corpus, Dialect};

    #[test]
    fn arm_names_round_trip() {
        for arm in Arm::ALL {
            assert_eq!(Arm::parse(arm.name()), Some(arm));
        }
        assert_eq!(Arm::parse("nope"), None);
        assert!(!Arm::WoStage2.runs_stage2() && Arm::WoStage2.runs_stage1());
        assert!(!Arm::WoStage1.runs_stage1() && Arm::WoStage1.runs_stage2());
        assert_eq!(Arm::WoCodeStyle.variants(4), 0);
        assert_eq!(Arm::Full.variants(4), 4);
    }

    #[test]
    fn perturbation_preserves_logic() {
        let corpus = toy_corpus(12, 0, Dialect::Python);
        let perturbed = perturb_corpus(&corpus, 0);
        for (a, b) in corpus.iter().zip(&perturbed) {
            assert_ne!(a.code, b.code);
            assert_eq!(normalize(&a.code), normalize(&b.code));
            assert_eq!(a.query, b.query);
        }
    }
}
