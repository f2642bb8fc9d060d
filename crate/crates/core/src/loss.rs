//! The two in-batch contrastive objectives.
//!
//! Stage 1 aligns each query `q_i` with its pseudo-code `p_i` against the
//! pseudo-code of the other batch samples:
//!
//! ```text
//! L1 = -1/B Σ_i log( e^{φ(q_i,p_i)} / (e^{φ(q_i,p_i)} + Σ_{j∈N(i)} e^{φ(q_i,p_j)}) )
//! ```
//!
//! Stage 2 aligns each pseudo-code `p_i` with its set of positive code
//! texts `P_i` against every positive of the other samples:
//!
//! ```text
//! L2 = -1/B Σ_i log( Σ_{c∈P_i} e^{φ(p_i,c)} / (Σ_{c∈P_i} e^{φ(p_i,c)} + Σ_{c∈N(i)} e^{φ(p_i,c)}) )
//! ```
//!
//! with `φ(x, y) = cos(x, y) / τ`. Both are evaluated as differences of
//! log-sum-exps. `N(i)` holds one entry per *distinct* other sample: every
//! batch row carries an owner key, rows sharing the owner of `i` are never
//! negatives for `i`, and repeated owners contribute their first row only.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::encoder::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Stage1,
    Stage2,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batch fields have mismatched lengths")]
    Ragged,
    #[error("sample {0} has no positive code")]
    EmptyPositives(usize),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("embedding dimension mismatch")]
    DimensionMismatch,
    #[error("non-finite value in loss computation")]
    NonFinite,
}

/// Aligned embeddings for one optimization step.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub queries: Vec<Embedding>,
    pub pseudo: Vec<Embedding>,
    pub positives: Vec<Vec<Embedding>>,
    pub owners: Vec<usize>,
}

impl Batch {
    /// `<query, pseudo-code>` rows, each its own owner.
    pub fn stage1(queries: Vec<Embedding>, pseudo: Vec<Embedding>) -> Self {
        let owners = (0..pseudo.len()).collect();
        Self { queries, pseudo, positives: Vec::new(), owners }
    }

    /// `<pseudo-code, positive code set>` rows, each its own owner.
    pub fn stage2(pseudo: Vec<Embedding>, positives: Vec<Vec<Embedding>>) -> Self {
        let owners = (0..pseudo.len()).collect();
        Self { queries: Vec::new(), pseudo, positives, owners }
    }

    pub fn with_owners(mut self, owners: Vec<usize>) -> Self {
        self.owners = owners;
        self
    }

    pub fn len(&self) -> usize {
        self.pseudo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudo.is_empty()
    }

    /// Row indices forming the negative set of row `i`.
    pub fn negatives(&self, i: usize) -> Vec<usize> {
        negatives(&self.owners, i)
    }
}

pub(crate) fn negatives(owners: &[usize], i: usize) -> Vec<usize> {
    (0..owners.len())
        .filter(|&j| owners[j] != owners[i] && owners[..j].iter().all(|&o| o != owners[j]))
        .collect()
}

/// Gradients of a loss with respect to every embedding in a [`Batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrads {
    pub queries: Vec<Vec<f64>>,
    pub pseudo: Vec<Vec<f64>>,
    pub positives: Vec<Vec<Vec<f64>>>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + libm::log(xs.iter().map(|&x| libm::exp(x - m)).sum::<f64>())
}

fn check_common(batch: &Batch, tau: f64) -> Result<usize, LossError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(LossError::BadTemperature(tau));
    }
    if batch.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if batch.owners.len() != batch.len() {
        return Err(LossError::Ragged);
    }
    Ok(batch.pseudo[0].dim())
}

fn check_dims<'a>(dim: usize, es: impl IntoIterator<Item = &'a Embedding>) -> Result<(), LossError> {
    if es.into_iter().all(|e| e.dim() == dim) {
        Ok(())
    } else {
        Err(LossError::DimensionMismatch)
    }
}

fn axpy(acc: &mut [f64], scale: f64, x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, v)| *a += scale * v);
}

pub fn loss_stage1(batch: &Batch, tau: f64) -> Result<f64, LossError> {
    stage1_with_grads(batch, tau).map(|(loss, _)| loss)
}

pub fn loss_stage2(batch: &Batch, tau: f64) -> Result<f64, LossError> {
    stage2_with_grads(batch, tau).map(|(loss, _)| loss)
}

pub fn loss(kind: LossKind, batch: &Batch, tau: f64) -> Result<f64, LossError> {
    match kind {
        LossKind::Stage1 => loss_stage1(batch, tau),
        LossKind::Stage2 => loss_stage2(batch, tau),
    }
}

pub fn loss_with_grads(kind: LossKind, batch: &Batch, tau: f64) -> Result<(f64, EmbeddingGrads), LossError> {
    match kind {
        LossKind::Stage1 => stage1_with_grads(batch, tau),
        LossKind::Stage2 => stage2_with_grads(batch, tau),
    }
}

pub fn stage1_with_grads(batch: &Batch, tau: f64) -> Result<(f64, EmbeddingGrads), LossError> {
    let dim = check_common(batch, tau)?;
    let b = batch.len();
    if batch.queries.len() != b {
        return Err(LossError::Ragged);
    }
    check_dims(dim, batch.queries.iter().chain(&batch.pseudo))?;

    let mut grads = EmbeddingGrads {
        queries: vec![vec![0.0; dim]; b],
        pseudo: vec![vec![0.0; dim]; b],
        positives: Vec::new(),
    };
    let inv_b = 1.0 / b as f64;
    let mut total = 0.0;
    for i in 0..b {
        let q = &batch.queries[i];
        // candidate rows: the positive first, then the negatives
        let mut rows = vec![i];
        rows.extend(batch.negatives(i));
        let logits: Vec<f64> = rows.iter().map(|&j| q.dot(&batch.pseudo[j]) / tau).collect();
        let lse = log_sum_exp(&logits);
        let term = lse - logits[0];
        if !term.is_finite() {
            return Err(LossError::NonFinite);
        }
        total += term;
        for (slot, (&j, &s)) in rows.iter().zip(&logits).enumerate() {
            let weight = libm::exp(s - lse) - if slot == 0 { 1.0 } else { 0.0 };
            if weight == 0.0 {
                continue;
            }
            let scale = weight * inv_b / tau;
            axpy(&mut grads.queries[i], scale, batch.pseudo[j].as_slice());
            axpy(&mut grads.pseudo[j], scale, q.as_slice());
        }
    }
    Ok(((total * inv_b).max(0.0), grads))
}

pub fn stage2_with_grads(batch: &Batch, tau: f64) -> Result<(f64, EmbeddingGrads), LossError> {
    let dim = check_common(batch, tau)?;
    let b = batch.len();
    if batch.positives.len() != b {
        return Err(LossError::Ragged);
    }
    if let Some(i) = batch.positives.iter().position(Vec::is_empty) {
        return Err(LossError::EmptyPositives(i));
    }
    check_dims(dim, batch.pseudo.iter().chain(batch.positives.iter().flatten()))?;

    let mut grads = EmbeddingGrads {
        queries: Vec::new(),
        pseudo: vec![vec![0.0; dim]; b],
        positives: batch.positives.iter().map(|ps| vec![vec![0.0; dim]; ps.len()]).collect(),
    };
    let inv_b = 1.0 / b as f64;
    let mut total = 0.0;
    for i in 0..b {
        let p = &batch.pseudo[i];
        // (row, slot within that row's positive set)
        let mut cands: Vec<(usize, usize)> = (0..batch.positives[i].len()).map(|k| (i, k)).collect();
        let n_pos = cands.len();
        for j in batch.negatives(i) {
            cands.extend((0..batch.positives[j].len()).map(|k| (j, k)));
        }
        let logits: Vec<f64> = cands.iter().map(|&(j, k)| p.dot(&batch.positives[j][k]) / tau).collect();
        let lse_all = log_sum_exp(&logits);
        let lse_pos = log_sum_exp(&logits[..n_pos]);
        let term = lse_all - lse_pos;
        if !term.is_finite() {
            return Err(LossError::NonFinite);
        }
        total += term;
        for (slot, (&(j, k), &s)) in cands.iter().zip(&logits).enumerate() {
            let mut weight = libm::exp(s - lse_all);
            if slot < n_pos {
                weight -= libm::exp(s - lse_pos);
            }
            if weight == 0.0 {
                continue;
            }
            let scale = weight * inv_b / tau;
            axpy(&mut grads.pseudo[i], scale, batch.positives[j][k].as_slice());
            axpy(&mut grads.positives[j][k], scale, p.as_slice());
        }
    }
    Ok(((total * inv_b).max(0.0), grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(v: &[f64]) -> Embedding {
        Embedding::normalized(v.to_vec())
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Embedding {
        Embedding::normalized((0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn random_stage2(seed: u64, b: usize, d: usize, max_pos: usize) -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pseudo = (0..b).map(|_| random_unit(&mut rng, d)).collect();
        let positives = (0..b)
            .map(|_| {
                let n = rng.random_range(1..=max_pos);
                (0..n).map(|_| random_unit(&mut rng, d)).collect()
            })
            .collect();
        Batch::stage2(pseudo, positives)
    }

    fn random_stage1(seed: u64, b: usize, d: usize) -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = (0..b).map(|_| random_unit(&mut rng, d)).collect();
        let p = (0..b).map(|_| random_unit(&mut rng, d)).collect();
        Batch::stage1(q, p)
    }

    // direct transcription without the log-sum-exp shift
    fn naive_stage1(batch: &Batch, tau: f64) -> f64 {
        let b = batch.len();
        let mut total = 0.0;
        for i in 0..b {
            let pos = libm::exp(batch.queries[i].dot(&batch.pseudo[i]) / tau);
            let neg: f64 = (0..b).filter(|&j| j != i).map(|j| libm::exp(batch.queries[i].dot(&batch.pseudo[j]) / tau)).sum();
            total -= libm::log(pos / (pos + neg));
        }
        total / b as f64
    }

    fn naive_stage2(batch: &Batch, tau: f64) -> f64 {
        let b = batch.len();
        let mut total = 0.0;
        for i in 0..b {
            let p = &batch.pseudo[i];
            let pos: f64 = batch.positives[i].iter().map(|c| libm::exp(p.dot(c) / tau)).sum();
            let neg: f64 = (0..b)
                .filter(|&j| j != i)
                .flat_map(|j| batch.positives[j].iter())
                .map(|c| libm::exp(p.dot(c) / tau))
                .sum();
            total -= libm::log(pos / (pos + neg));
        }
        total / b as f64
    }

    #[test]
    fn single_sample_stage1_is_exactly_zero_with_zero_grads() {
        let batch = Batch::stage1(vec![unit(&[1.0, 2.0, 3.0])], vec![unit(&[3.0, -1.0, 0.5])]);
        let (l, g) = stage1_with_grads(&batch, 0.05).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.queries.iter().chain(&g.pseudo).flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn two_sample_worked_value() {
        let e1 = unit(&[1.0, 0.0]);
        let e2 = unit(&[0.0, 1.0]);
        let batch = Batch::stage1(vec![e1.clone(), e2.clone()], vec![e1, e2]);
        let expected = 0.313_261_687_518_222_86; // ln(1 + e^-1)
        assert!((loss_stage1(&batch, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn uniform_similarities_give_log_b() {
        let e = unit(&[0.3, -0.4, 0.5]);
        for b in 1..6 {
            let batch = Batch::stage1(vec![e.clone(); b], vec![e.clone(); b]);
            let l = loss_stage1(&batch, 0.05).unwrap();
            assert!((l - libm::log(b as f64)).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn single_sample_stage2_is_exactly_zero() {
        let batch = random_stage2(3, 1, 5, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch = Batch::stage2(batch.pseudo, vec![(0..4).map(|_| random_unit(&mut rng, 5)).collect()]);
        let (l, g) = stage2_with_grads(&batch, 0.05).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.pseudo.iter().chain(g.positives.iter().flatten()).flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn errors() {
        let empty = Batch::stage1(Vec::new(), Vec::new());
        assert_eq!(loss_stage1(&empty, 0.05), Err(LossError::EmptyBatch));
        let batch = Batch::stage2(vec![unit(&[1.0, 0.0])], vec![Vec::new()]);
        assert_eq!(loss_stage2(&batch, 0.05), Err(LossError::EmptyPositives(0)));
        let batch = random_stage1(0, 2, 3);
        assert!(matches!(loss_stage1(&batch, 0.0), Err(LossError::BadTemperature(_))));
        let ragged = Batch::stage1(vec![unit(&[1.0, 0.0])], vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0])]);
        assert_eq!(loss_stage1(&ragged, 1.0), Err(LossError::Ragged));
    }

    #[test]
    fn duplicated_owner_rows_are_not_negatives() {
        let batch = random_stage1(4, 3, 4);
        let base = loss_stage1(&batch, 0.1).unwrap();
        let doubled = Batch::stage1(
            batch.queries.iter().chain(&batch.queries).cloned().collect(),
            batch.pseudo.iter().chain(&batch.pseudo).cloned().collect(),
        )
        .with_owners(vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(doubled.negatives(3), vec![1, 2]);
        assert!((loss_stage1(&doubled, 0.1).unwrap() - base).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn stage2_singletons_reduce_to_stage1(seed in 0u64..10_000, b in 1usize..8, d in 2usize..12, tau in 0.05f64..2.0) {
            let s1 = random_stage1(seed, b, d);
            let positives = s1.pseudo.iter().map(|p| vec![p.clone()]).collect();
            // stage 2 anchors on `pseudo`, so the query plays that role here
            let s2 = Batch::stage2(s1.queries.clone(), positives);
            let l1 = loss_stage1(&s1, tau).unwrap();
            let l2 = loss_stage2(&s2, tau).unwrap();
            prop_assert!((l1 - l2).abs() <= 1e-12 * l1.abs().max(1.0));
        }

        #[test]
        fn losses_non_negative_and_match_naive(seed in 0u64..10_000, b in 1usize..8, d in 2usize..12, tau in 0.05f64..2.0) {
            let s1 = random_stage1(seed, b, d);
            let l1 = loss_stage1(&s1, tau).unwrap();
            prop_assert!(l1 >= 0.0);
            let n1 = naive_stage1(&s1, tau);
            prop_assert!((l1 - n1).abs() <= 1e-9 * n1.abs().max(1e-300) || (l1 - n1).abs() < 1e-14);
            let s2 = random_stage2(seed, b, d, 4);
            let l2 = loss_stage2(&s2, tau).unwrap();
            prop_assert!(l2 >= 0.0);
            let n2 = naive_stage2(&s2, tau);
            prop_assert!((l2 - n2).abs() <= 1e-9 * n2.abs().max(1e-300) || (l2 - n2).abs() < 1e-14);
        }

        #[test]
        fn permutation_invariant(seed in 0u64..10_000, b in 2usize..8, rot in 1usize..7) {
            let s2 = random_stage2(seed, b, 6, 3);
            let r = rot % b;
            let mut pseudo = s2.pseudo.clone();
            let mut pos = s2.positives.clone();
            pseudo.rotate_left(r);
            pos.rotate_left(r);
            let rotated = Batch::stage2(pseudo, pos);
            let a = loss_stage2(&s2, 0.05).unwrap();
            let c = loss_stage2(&rotated, 0.05).unwrap();
            prop_assert!((a - c).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
