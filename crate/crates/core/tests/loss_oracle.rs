//! Both objectives against 50-digit reference values frozen in
//! `fixtures/loss_oracle.json` (see `fixtures/gen_loss_oracle.py`).

use pseudobridge_core::encoder::Embedding;
use pseudobridge_core::loss::{loss_stage1, loss_stage2, Batch};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    seed: u64,
    tau: f64,
    queries: Vec<Vec<f64>>,
    pseudo: Vec<Vec<f64>>,
    positives: Vec<Vec<Vec<f64>>>,
    stage1: String,
    stage2: String,
}

fn cases() -> Vec<Case> {
    serde_json::from_str(include_str!("fixtures/loss_oracle.json")).unwrap()
}

fn embed(rows: &[Vec<f64>]) -> Vec<Embedding> {
    rows.iter().cloned().map(Embedding::from_unit).collect()
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs().max(f64::MIN_POSITIVE) || (want == 0.0 && got.abs() < 1e-12)
}

#[test]
fn hundred_random_batches_match_reference() {
    let cases = cases();
    assert_eq!(cases.len(), 100);
    for case in &cases {
        assert!(case.queries.len() <= 8 && case.queries[0].len() <= 16);
        let want1: f64 = case.stage1.parse().unwrap();
        let want2: f64 = case.stage2.parse().unwrap();
        let b1 = Batch::stage1(embed(&case.queries), embed(&case.pseudo));
        let b2 = Batch::stage2(embed(&case.pseudo), case.positives.iter().map(|p| embed(p)).collect());
        let got1 = loss_stage1(&b1, case.tau).unwrap();
        let got2 = loss_stage2(&b2, case.tau).unwrap();
        assert!(close(got1, want1), "seed {}: stage1 {got1} vs {want1}", case.seed);
        assert!(close(got2, want2), "seed {}: stage2 {got2} vs {want2}", case.seed);
    }
}

#[test]
fn worked_two_sample_value() {
    let e = |v: [f64; 2]| Embedding::from_unit(v.to_vec());
    let batch = Batch::stage1(vec![e([1.0, 0.0]), e([0.0, 1.0])], vec![e([1.0, 0.0]), e([0.0, 1.0])]);
    let loss = loss_stage1(&batch, 1.0).unwrap();
    assert!((loss - 0.313_261_687_518_222_86).abs() < 1e-15, "{loss}");
}

#[test]
fn single_sample_batches_are_exactly_zero() {
    let e = Embedding::from_unit(vec![0.6, 0.8]);
    assert_eq!(loss_stage1(&Batch::stage1(vec![e.clone()], vec![e.clone()]), 0.05).unwrap(), 0.0);
    let positives = vec![vec![e.clone(), e.clone(), Embedding::from_unit(vec![1.0, 0.0]), e.clone()]];
    assert_eq!(loss_stage2(&Batch::stage2(vec![e], positives), 0.05).unwrap(), 0.0);
}
