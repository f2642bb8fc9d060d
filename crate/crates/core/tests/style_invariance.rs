//! Offline style variants keep the normalized token stream of the code.

use std::collections::BTreeSet;

use proptest::prelude::*;
use pseudobridge_core::synth::style::{apply_variant, normalize, MAX_VARIANTS};
use pseudobridge_core::synth::{generate_variants, OfflineBackend};
use pseudobridge_core::toy::{random_python, toy_corpus, Dialect};

#[test]
fn two_hundred_generated_functions() {
    for seed in 0..200 {
        let code = random_python(seed);
        let reference = normalize(&code);
        let mut seen = BTreeSet::new();
        for k in 1..=4 {
            let v = apply_variant(&code, k, seed).unwrap();
            assert_eq!(normalize(&v), reference, "seed {seed} variant {k}:\n{code}\n---\n{v}");
            seen.insert(v);
        }
        assert_eq!(seen.len(), 4, "seed {seed}:\n{code}");
    }
}

#[test]
fn composed_recipes_on_toy_code() {
    for s in toy_corpus(100, 4, Dialect::Python) {
        for k in 1..=MAX_VARIANTS {
            assert_eq!(normalize(&apply_variant(&s.code, k, 1).unwrap()), normalize(&s.code), "{}", s.id);
        }
    }
}

#[test]
fn generated_variant_lists_are_deterministic() {
    let backend = OfflineBackend::new(3);
    let code = random_python(11);
    let a = generate_variants("FUNCTION x", &code, "q", 4, &backend, 4.0).unwrap();
    let b = generate_variants("FUNCTION x", &code, "q", 4, &backend, 4.0).unwrap();
    assert_eq!(a, b);
    assert!(a.complete);
    assert_eq!(a.variants.len(), 4);
    let one = generate_variants("FUNCTION x", &code, "q", 1, &backend, 4.0).unwrap();
    assert_eq!(one.variants.len(), 1);
}

#[test]
fn asking_beyond_the_recipe_count_is_partial() {
    let backend = OfflineBackend::new(0);
    let set = generate_variants("FUNCTION f", "def f(a):\n    return a", "q", 20, &backend, 4.0).unwrap();
    assert!(!set.complete);
    assert!(set.variants.len() <= MAX_VARIANTS);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_recipe_preserves_logic(seed in any::<u64>(), k in 1..=MAX_VARIANTS, style_seed in 0u64..8) {
        let code = random_python(seed);
        let v = apply_variant(&code, k, style_seed).unwrap();
        prop_assert_eq!(normalize(&v), normalize(&code));
    }
}
