//! Ranking metrics against brute-force reimplementations.

use pseudobridge_core::metrics::{mrr, recall_at_k, recall_from_ranks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_mrr(ranks: &[usize]) -> f64 {
    let mut s = 0.0;
    for r in ranks {
        s += 1.0 / *r as f64;
    }
    s / ranks.len() as f64
}

fn brute_recall(pairs: &[(usize, usize)]) -> f64 {
    let mut s = 0.0;
    for (m, total) in pairs {
        s += *m as f64 / *total as f64;
    }
    s / pairs.len() as f64
}

#[test]
fn thousand_random_rank_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let ranks: Vec<usize> = (0..n).map(|_| rng.random_range(1..200)).collect();
        assert_eq!(mrr(&ranks).unwrap(), brute_mrr(&ranks));
        for k in [1, 5, 10, 100] {
            let hits: Vec<(usize, usize)> = ranks.iter().map(|&r| (usize::from(r <= k), 1)).collect();
            assert_eq!(recall_from_ranks(&ranks, k).unwrap(), brute_recall(&hits));
        }
        let k = rng.random_range(1..10);
        let pairs: Vec<(usize, usize)> = (0..n)
            .map(|_| {
                let total = rng.random_range(1..8);
                (rng.random_range(0..=k.min(total)), total)
            })
            .collect();
        assert_eq!(recall_at_k(&pairs, k).unwrap(), brute_recall(&pairs));
    }
}

#[test]
fn worked_values() {
    assert_eq!(mrr(&[1, 2, 4]).unwrap(), 7.0 / 12.0);
    assert_eq!(format!("{:.5}", mrr(&[1, 2, 4]).unwrap()), "0.58333");
    assert_eq!(recall_at_k(&[(1, 1), (0, 1), (1, 1), (0, 1)], 1).unwrap(), 0.5);
}

#[test]
fn recall_is_monotone_in_k_and_bounded_by_mrr() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let ranks: Vec<usize> = (0..20).map(|_| rng.random_range(1..30)).collect();
        let m = mrr(&ranks).unwrap();
        assert!(m > 0.0 && m <= 1.0);
        assert!(m >= recall_from_ranks(&ranks, 1).unwrap());
        let mut prev = 0.0;
        for k in 1..35 {
            let r = recall_from_ranks(&ranks, k).unwrap();
            assert!(r >= prev && r <= 1.0);
            prev = r;
        }
    }
}
