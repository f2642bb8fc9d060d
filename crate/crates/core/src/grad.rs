//! Analytic gradients of the contrastive losses with respect to the
//! embedding table.
//!
//! For one encoded text with tokens `t_1..t_T`, mean `m` and unit output
//! `e = m / |m|`, an upstream gradient `g` on `e` becomes
//! `(g - (g·e) e) / |m|` on `m`, and `1/T` of that on every token row (once
//! per occurrence). Texts that fell back to the fixed basis vector carry no
//! gradient.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::encoder::{dot, EncoderError, EncoderParams, Pooled};
use crate::loss::{loss_with_grads, Batch, LossError, LossKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("non-finite gradient")]
    NonFinite,
}

/// Source texts for one step. Rows sharing an owner are the same sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TextBatch {
    pub owners: Vec<usize>,
    pub queries: Vec<String>,
    pub pseudo: Vec<String>,
    pub positives: Vec<Vec<String>>,
}

impl TextBatch {
    pub fn stage1(queries: Vec<String>, pseudo: Vec<String>) -> Self {
        Self { owners: (0..pseudo.len()).collect(), queries, pseudo, positives: Vec::new() }
    }

    pub fn stage2(pseudo: Vec<String>, positives: Vec<Vec<String>>) -> Self {
        Self { owners: (0..pseudo.len()).collect(), queries: Vec::new(), pseudo, positives }
    }

    pub fn len(&self) -> usize {
        self.pseudo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudo.is_empty()
    }
}

/// Dense gradient with the shape of [`EncoderParams::table`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Gradient {
    pub fn zeros(params: &EncoderParams) -> Self {
        Self { dim: params.dim, data: vec![0.0; params.table.len()] }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    fn backprop(&mut self, pooled: &Pooled, upstream: &[f64]) {
        if pooled.norm == 0.0 {
            return;
        }
        let e = pooled.unit.as_slice();
        let along = dot(upstream, e);
        let scale = 1.0 / (pooled.norm * pooled.tokens.len() as f64);
        for &t in &pooled.tokens {
            let start = t as usize * self.dim;
            let row = &mut self.data[start..start + self.dim];
            for ((r, g), x) in row.iter_mut().zip(upstream).zip(e) {
                *r += (g - along * x) * scale;
            }
        }
    }
}

fn pool_all(params: &EncoderParams, texts: &[String]) -> Result<Vec<Pooled>, EncoderError> {
    texts.iter().map(|t| params.pool(params.tokenizer.tokenize(t))).collect()
}

/// Loss value and its gradient for `batch` encoded under `params`.
pub fn loss_and_grad(
    kind: LossKind,
    batch: &TextBatch,
    params: &EncoderParams,
    tau: f64,
) -> Result<(f64, Gradient), GradError> {
    let pseudo = pool_all(params, &batch.pseudo)?;
    let (queries, positives) = match kind {
        LossKind::Stage1 => (pool_all(params, &batch.queries)?, Vec::new()),
        LossKind::Stage2 => {
            let pos = batch.positives.iter().map(|ps| pool_all(params, ps)).collect::<Result<Vec<_>, _>>()?;
            (Vec::new(), pos)
        }
    };
    let units = |ps: &[Pooled]| ps.iter().map(|p| p.unit.clone()).collect::<Vec<_>>();
    let emb = Batch {
        queries: units(&queries),
        pseudo: units(&pseudo),
        positives: positives.iter().map(|ps| units(ps)).collect(),
        owners: batch.owners.clone(),
    };
    let (loss, eg) = loss_with_grads(kind, &emb, tau)?;

    let mut grad = Gradient::zeros(params);
    for (p, g) in queries.iter().zip(&eg.queries) {
        grad.backprop(p, g);
    }
    for (p, g) in pseudo.iter().zip(&eg.pseudo) {
        grad.backprop(p, g);
    }
    for (ps, gs) in positives.iter().zip(&eg.positives) {
        for (p, g) in ps.iter().zip(gs) {
            grad.backprop(p, g);
        }
    }
    if grad.data.iter().any(|x| !x.is_finite()) {
        return Err(GradError::NonFinite);
    }
    Ok((loss, grad))
}

pub fn grad(kind: LossKind, batch: &TextBatch, params: &EncoderParams, tau: f64) -> Result<Gradient, GradError> {
    loss_and_grad(kind, batch, params, tau).map(|(_, g)| g)
}

/// Loss only, through the same encode path.
pub fn text_loss(kind: LossKind, batch: &TextBatch, params: &EncoderParams, tau: f64) -> Result<f64, GradError> {
    let enc = |ts: &[String]| ts.iter().map(|t| params.encode(t)).collect::<Result<Vec<_>, _>>();
    let emb = Batch {
        queries: if kind == LossKind::Stage1 { enc(&batch.queries)? } else { Vec::new() },
        pseudo: enc(&batch.pseudo)?,
        positives: if kind == LossKind::Stage2 {
            batch.positives.iter().map(|ps| enc(ps)).collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        },
        owners: batch.owners.clone(),
    };
    Ok(crate::loss::loss(kind, &emb, tau)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::tokenizer::Tokenizer;
    use alloc::string::ToString;

    fn params() -> EncoderParams {
        let config = EncoderConfig {
            tokenizer: Tokenizer { vocab_buckets: 64, max_len: 512, lowercase: true },
            dim: 8,
            init_scale: 1.0,
        };
        EncoderParams::init(&config, 11).unwrap()
    }

    fn s(x: &str) -> String {
        x.to_string()
    }

    #[test]
    fn single_sample_batches_have_zero_gradient() {
        let p = params();
        let b1 = TextBatch::stage1(vec![s("sum the values")], vec![s("FUNCTION total(xs):")]);
        assert!(grad(LossKind::Stage1, &b1, &p, 0.05).unwrap().is_zero());
        let b2 = TextBatch::stage2(
            vec![s("FUNCTION total(xs):")],
            vec![vec![s("def total(xs):"), s("def total(v1):"), s("def  total(xs): # x"), s("x y")]],
        );
        assert!(grad(LossKind::Stage2, &b2, &p, 0.05).unwrap().is_zero());
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let p = params();
        let q = vec![s("sum the values"), s("find the largest item"), s("reverse a list")];
        let c = vec![s("total acc add"), s("best max if"), s("reversed slice")];
        let base = TextBatch::stage1(q.clone(), c.clone());
        let doubled = TextBatch {
            owners: vec![0, 1, 2, 0, 1, 2],
            queries: q.iter().chain(&q).cloned().collect(),
            pseudo: c.iter().chain(&c).cloned().collect(),
            positives: Vec::new(),
        };
        let (l1, g1) = loss_and_grad(LossKind::Stage1, &base, &p, 0.05).unwrap();
        let (l2, g2) = loss_and_grad(LossKind::Stage1, &doubled, &p, 0.05).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.data.iter().zip(&g2.data) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn loss_paths_agree() {
        let p = params();
        let b = TextBatch::stage2(
            vec![s("FUNCTION a"), s("FUNCTION b")],
            vec![vec![s("def a"), s("def v1")], vec![s("def b")]],
        );
        let (l, _) = loss_and_grad(LossKind::Stage2, &b, &p, 0.1).unwrap();
        assert_eq!(l, text_loss(LossKind::Stage2, &b, &p, 0.1).unwrap());
    }
}
