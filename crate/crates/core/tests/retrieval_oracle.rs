//! Exact top-k search against a full sort, including exact ties.

use std::cmp::Ordering;

use pseudobridge_core::encoder::Embedding;
use pseudobridge_core::retrieval::{Index, RankedResult};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn naive(ids: &[String], rows: &[Vec<f64>], q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = ids
        .iter()
        .zip(rows)
        .map(|(id, r)| (id.clone(), r.iter().zip(q).map(|(a, b)| a * b).sum()))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn flat(r: &RankedResult) -> Vec<(String, f64)> {
    r.hits.iter().map(|h| (h.id.clone(), h.score)).collect()
}

#[test]
fn matches_full_sort_with_ties() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1000;
        let d = 16;
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| unit(&mut rng, d)).collect();
        // exact duplicates give exact score ties
        for _ in 0..50 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            rows[b] = rows[a].clone();
        }
        let mut ids: Vec<String> = (0..n).map(|i| format!("doc{i:04}")).collect();
        ids.shuffle(&mut rng);
        let matrix: Vec<f64> = rows.iter().flatten().copied().collect();
        let index = Index::new(ids.clone(), d, matrix).unwrap();
        for qi in 0..20 {
            let q = if qi % 4 == 0 { rows[rng.random_range(0..n)].clone() } else { unit(&mut rng, d) };
            let query = Embedding::from_unit(q.clone());
            for k in [1, 10, n] {
                let want = naive(&ids, &rows, &q, k);
                assert_eq!(flat(&index.search(&query, k).unwrap()), want, "seed {seed} query {qi} k {k}");
                assert_eq!(flat(&index.search_blocked(&query, k, 37).unwrap()), want);
            }
            let full = naive(&ids, &rows, &q, n);
            for probe in 0..10 {
                let id = &ids[(qi * 10 + probe) % n];
                let rank = index.rank_of(&query, id).unwrap();
                assert_eq!(&full[rank - 1].0, id);
            }
        }
    }
}

#[test]
fn identical_rows_order_by_id() {
    let index = Index::new(vec!["b".into(), "a".into(), "c".into()], 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
    let r = index.search(&Embedding::from_unit(vec![1.0, 0.0]), 3).unwrap();
    let ids: Vec<&str> = r.hits.iter().map(|h| h.id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert_eq!(index.rank_of(&Embedding::from_unit(vec![0.0, 1.0]), "a").unwrap(), 2);
}
