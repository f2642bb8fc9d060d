//! Adaptive-moment optimizer with decoupled weight decay and a linear
//! warmup schedule.
//!
//! Optimizer state layout: magic `PBOP`, version byte, step (u64), length
//! (u64), then the first and second moment vectors as f64, little-endian.

use alloc::vec;
use alloc::vec::Vec;

use crate::bytes::{FormatError, Reader, Writer};
use crate::encoder::EncoderParams;
use crate::grad::Gradient;

pub const OPTIMIZER_MAGIC: &[u8; 4] = b"PBOP";
pub const OPTIMIZER_VERSION: u8 = 1;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Learning rate for 0-based `step` out of `total_steps`: a linear ramp
/// over the first `ceil(warmup_fraction * total_steps)` steps, then flat.
pub fn scheduled_lr(base_lr: f64, step: u64, total_steps: u64, warmup_fraction: f64) -> f64 {
    let warmup = libm::ceil(warmup_fraction * total_steps as f64) as u64;
    if warmup == 0 || step >= warmup {
        base_lr
    } else {
        base_lr * (step + 1) as f64 / warmup as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub weight_decay: f64,
}

impl AdamState {
    pub fn new(params: &EncoderParams, weight_decay: f64) -> Self {
        let n = params.table.len();
        Self { step: 0, first: vec![0.0; n], second: vec![0.0; n], weight_decay }
    }

    /// One update at learning rate `lr`.
    pub fn step(&mut self, params: &mut EncoderParams, grad: &Gradient, lr: f64) {
        debug_assert_eq!(grad.data.len(), params.table.len());
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(BETA1, t);
        let c2 = 1.0 - libm::pow(BETA2, t);
        let decay = 1.0 - lr * self.weight_decay;
        for (((w, m), v), &g) in params
            .table
            .iter_mut()
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
            .zip(&grad.data)
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            if *m == 0.0 && self.weight_decay == 0.0 {
                continue;
            }
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w = *w * decay - lr * m_hat / (libm::sqrt(v_hat) + EPSILON);
        }
    }

    pub fn moments_finite(&self) -> bool {
        self.first.iter().chain(&self.second).all(|x| x.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(OPTIMIZER_MAGIC, OPTIMIZER_VERSION);
        w.u64(self.step);
        w.u64(self.first.len() as u64);
        w.f64s(&[self.weight_decay]);
        w.f64s(&self.first);
        w.f64s(&self.second);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let (mut r, _) = Reader::with_header(bytes, OPTIMIZER_MAGIC, OPTIMIZER_VERSION)?;
        let step = r.u64()?;
        let n = r.u64()? as usize;
        let weight_decay = r.f64s(1)?[0];
        let first = r.f64s(n)?;
        let second = r.f64s(n)?;
        r.finish()?;
        Ok(Self { step, first, second, weight_decay })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::tokenizer::Tokenizer;

    #[test]
    fn warmup_ramps_then_holds() {
        // 27 steps at 10% warmup -> 3 warmup steps
        let lrs: Vec<f64> = (0..5).map(|s| scheduled_lr(0.3, s, 27, 0.1)).collect();
        assert!((lrs[0] - 0.1).abs() < 1e-15);
        assert!((lrs[1] - 0.2).abs() < 1e-15);
        assert_eq!(&lrs[2..], &[0.3, 0.3, 0.3]);
        assert_eq!(scheduled_lr(0.3, 0, 10, 0.0), 0.3);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let config = EncoderConfig {
            tokenizer: Tokenizer { vocab_buckets: 2, max_len: 8, lowercase: true },
            dim: 2,
            init_scale: 1.0,
        };
        let mut params = EncoderParams::init(&config, 0).unwrap();
        let before = params.table.clone();
        let mut opt = AdamState::new(&params, 0.0);
        let grad = Gradient { dim: 2, data: vec![0.5, -2.0, 0.0, 1e-3] };
        opt.step(&mut params, &grad, 0.01);
        let delta: Vec<f64> = params.table.iter().zip(&before).map(|(a, b)| a - b).collect();
        assert!((delta[0] + 0.01).abs() < 1e-9);
        assert!((delta[1] - 0.01).abs() < 1e-9);
        assert_eq!(delta[2], 0.0);
        assert!((delta[3] + 0.01).abs() < 1e-6);
        assert!(opt.moments_finite());
        assert_eq!(AdamState::from_bytes(&opt.to_bytes()).unwrap(), opt);
    }
}
